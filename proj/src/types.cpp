#include "eigrefine/types.hpp"

#include <cmath>
#include <utility>

namespace eigrefine {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), a_(std::move(entries)) {
    if (a_.size() != rows * cols) {
        throw DimensionError("DenseMatrix: entry count does not match shape");
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool DenseMatrix::is_finite() const {
    for (double v : a_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
    if (!same_shape(other)) throw DimensionError("operator+=: shape mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += other.a_[k];
    return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
    if (!same_shape(other)) throw DimensionError("operator-=: shape mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= other.a_[k];
    return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
}

DiagMatrix::DiagMatrix(std::vector<double> d) : d_(std::move(d)) {
    for (double v : d_) {
        if (!std::isfinite(v)) throw InvalidMatrixError("DiagMatrix: non-finite entry");
    }
}

DenseMatrix DiagMatrix::dense() const {
    DenseMatrix m(d_.size(), d_.size());
    for (std::size_t i = 0; i < d_.size(); ++i) m(i, i) = d_[i];
    return m;
}

double DiagMatrix::max_abs() const {
    double m = 0.0;
    for (double v : d_) m = std::max(m, std::fabs(v));
    return m;
}

SymMatrix::SymMatrix(DenseMatrix m) {
    if (m.rows() != m.cols()) throw DimensionError("SymMatrix: input not square");
    if (!m.is_finite()) throw InvalidMatrixError("SymMatrix: non-finite entry");
    const std::size_t n = m.rows();
    double fro2 = 0.0;
    for (double v : m.entries()) fro2 += v * v;
    const double fro = std::sqrt(fro2);
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            asym = std::max(asym, std::fabs(m(i, j) - m(j, i)));
            const double avg = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = avg;
            m(j, i) = avg;
        }
    }
    if (fro > 0.0 && asym > 1e-8 * fro) {
        throw InvalidMatrixError("SymMatrix: asymmetry exceeds 1e-8 * ||M||_F");
    }
    max_asymmetry_ = asym;
    m_ = std::move(m);
}

} // namespace eigrefine
