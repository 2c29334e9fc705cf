#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "eigrefine/errors.hpp"

namespace eigrefine {

/// Unit roundoff of binary64 (half the machine epsilon).
inline constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2.0;

/// Precision regime for residual products.
enum class AccumMode {
    Working,     ///< plain binary64 dot products
    Compensated  ///< error-free transformations, rounded once to binary64
};

/// Dense row-major matrix of binary64 scalars.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    const std::vector<double>& entries() const { return a_; }

    bool is_finite() const;
    bool same_shape(const DenseMatrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    DenseMatrix transposed() const;

    DenseMatrix& operator+=(const DenseMatrix& other);
    DenseMatrix& operator-=(const DenseMatrix& other);
    DenseMatrix& operator*=(double s);
    friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
    friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
    friend DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }
    friend DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> a_;
};

/// Diagonal matrix, stored as its diagonal.
class DiagMatrix {
public:
    DiagMatrix() = default;
    explicit DiagMatrix(std::size_t n) : d_(n, 0.0) {}
    explicit DiagMatrix(std::vector<double> d);

    std::size_t size() const { return d_.size(); }
    double& operator[](std::size_t i) { return d_[i]; }
    double operator[](std::size_t i) const { return d_[i]; }
    const std::vector<double>& values() const { return d_; }

    DenseMatrix dense() const;
    double max_abs() const;

private:
    std::vector<double> d_;
};

/// Dense symmetric matrix. Construction symmetrizes (M + M^T)/2 and rejects
/// inputs whose asymmetry exceeds 1e-8 * ||M||_F.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(DenseMatrix m);

    std::size_t n() const { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const DenseMatrix& dense() const { return m_; }
    double max_asymmetry() const { return max_asymmetry_; }

private:
    DenseMatrix m_;
    double max_asymmetry_ = 0.0;
};

} // namespace eigrefine
