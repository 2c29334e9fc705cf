#include "eigrefine/matkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eigrefine {

namespace {

// Error-free sum: s + e == a + b exactly.
inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    const double t = s - a;
    e = (a - (s - t)) + (b - t);
}

// Error-free product: p + e == a * b exactly.
inline void two_prod(double a, double b, double& p, double& e) {
    p = a * b;
    e = std::fma(a, b, -p);
}

} // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    DenseMatrix c(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c.data() + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = a(i, l);
            const double* bl = b.data() + l * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += ail * bl[j];
        }
    }
    return c;
}

double dot_compensated(const double* x, std::size_t x_stride,
                       const double* y, std::size_t y_stride, std::size_t n) {
    double p = 0.0, s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double h, r, q;
        two_prod(x[k * x_stride], y[k * y_stride], h, r);
        two_sum(p, h, p, q);
        s += q + r;
    }
    return p + s;
}

DenseMatrix accurate_product(const DenseMatrix& a, const DenseMatrix& b, AccumMode mode) {
    if (mode == AccumMode::Working) return matmul(a, b);
    if (a.cols() != b.rows()) throw DimensionError("accurate_product: inner dimensions differ");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    DenseMatrix c(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a.data() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            c(i, j) = dot_compensated(ai, 1, b.data() + j, n, k);
        }
    }
    return c;
}

namespace {
double frobenius_impl(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}
} // namespace

double frobenius_norm(const DenseMatrix& m) { return frobenius_impl(m.entries()); }
double frobenius_norm(const SymMatrix& m) { return frobenius_impl(m.dense().entries()); }
double frobenius_norm(const DiagMatrix& d) { return frobenius_impl(d.values()); }

double offdiag_frobenius(const DenseMatrix& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (i != j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
}

double offdiag_frobenius(const SymMatrix& m) { return offdiag_frobenius(m.dense()); }

double max_abs(const DenseMatrix& m) {
    double r = 0.0;
    for (double v : m.entries()) r = std::max(r, std::fabs(v));
    return r;
}

double spectral_norm(const DenseMatrix& m, const SpectralNormOptions& opts) {
    const std::size_t rows = m.rows(), cols = m.cols();
    if (rows == 0 || cols == 0) return 0.0;
    std::vector<double> v(cols, 1.0 / std::sqrt(static_cast<double>(cols)));
    std::vector<double> mv(rows, 0.0), w(cols, 0.0);
    double sigma = 0.0;
    double prev = -1.0;
    bool retried = false;
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
        // mv = M v
        for (std::size_t i = 0; i < rows; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols; ++j) s += m(i, j) * v[j];
            mv[i] = s;
        }
        double norm_mv = std::sqrt(std::inner_product(mv.begin(), mv.end(), mv.begin(), 0.0));
        sigma = norm_mv;
        if (norm_mv == 0.0) {
            // all-ones start annihilated; retry once with an alternating-sign start
            if (retried) return 0.0;
            retried = true;
            for (std::size_t j = 0; j < cols; ++j)
                v[j] = ((j % 2 == 0) ? 1.0 : -1.0) / std::sqrt(static_cast<double>(cols));
            continue;
        }
        // w = M^T mv, next v = w / |w|
        for (std::size_t j = 0; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < rows; ++i) s += m(i, j) * mv[i];
            w[j] = s;
        }
        double norm_w = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        if (norm_w == 0.0) return sigma;
        for (std::size_t j = 0; j < cols; ++j) v[j] = w[j] / norm_w;
        if (prev >= 0.0 && std::fabs(sigma - prev) <= 0.01 * opts.rel_tol * sigma) return sigma;
        prev = sigma;
    }
    throw ConvergenceError("spectral_norm: power iteration did not settle", sigma);
}

double spectral_norm(const SymMatrix& m, const SpectralNormOptions& opts) {
    return spectral_norm(m.dense(), opts);
}

JacobiResult jacobi_eigen(const SymMatrix& a_in, const JacobiOptions& opts) {
    const std::size_t n = a_in.n();
    if (n > opts.size_limit) throw Error("jacobi_eigen: order exceeds configured limit");
    DenseMatrix a = a_in.dense();
    DenseMatrix q = DenseMatrix::identity(n);
    const double scale = frobenius_norm(a);
    const double target = opts.off_tol * scale;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    std::size_t sweep = 0;
    while (off_norm() > target) {
        if (sweep++ >= opts.max_sweeps) {
            throw ConvergenceError("jacobi_eigen: sweep limit exceeded", off_norm());
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t qq = p + 1; qq < n; ++qq) {
                const double apq = a(p, qq);
                if (std::fabs(apq) <= 0.1 * target / static_cast<double>(n)) continue;
                const double app = a(p, p), aqq = a(qq, qq);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // A <- J^T A J with J the rotation in the (p,q) plane
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, qq);
                    a(k, p) = c * akp - s * akq;
                    a(k, qq) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(qq, k);
                    a(p, k) = c * apk - s * aqk;
                    a(qq, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p), qkq = q(k, qq);
                    q(k, p) = c * qkp - s * qkq;
                    q(k, qq) = s * qkp + c * qkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
    DiagMatrix lambda(n);
    DenseMatrix qs(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        lambda[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) qs(i, j) = q(i, order[j]);
    }
    return {std::move(qs), std::move(lambda)};
}

LuDecomposition::LuDecomposition(DenseMatrix a) : lu_(std::move(a)) {
    if (lu_.rows() != lu_.cols()) throw DimensionError("LU: matrix not square");
    const std::size_t n = lu_.rows();
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), 0);
    min_pivot_abs_ = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::fabs(lu_(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::fabs(lu_(i, k)) > best) {
                best = std::fabs(lu_(i, k));
                piv = i;
            }
        }
        if (best == 0.0) throw NumericError("LU: singular matrix");
        min_pivot_abs_ = std::min(min_pivot_abs_, best);
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
            std::swap(perm_[k], perm_[piv]);
        }
        const double d = lu_(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu_(i, k) / d;
            lu_(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
        }
    }
}

DenseMatrix LuDecomposition::solve(const DenseMatrix& b) const {
    const std::size_t n = lu_.rows();
    if (b.rows() != n) throw DimensionError("LU solve: right-hand side shape mismatch");
    const std::size_t nrhs = b.cols();
    DenseMatrix x(n, nrhs);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < nrhs; ++j) x(i, j) = b(perm_[i], j);
    // forward substitution, unit lower triangle
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t k = 0; k < i; ++k) {
            const double f = lu_(i, k);
            for (std::size_t j = 0; j < nrhs; ++j) x(i, j) -= f * x(k, j);
        }
    // back substitution
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) {
            const double f = lu_(ii, k);
            for (std::size_t j = 0; j < nrhs; ++j) x(ii, j) -= f * x(k, j);
        }
        const double d = lu_(ii, ii);
        for (std::size_t j = 0; j < nrhs; ++j) x(ii, j) /= d;
    }
    return x;
}

DenseMatrix lu_solve(const DenseMatrix& a, const DenseMatrix& b) {
    return LuDecomposition(a).solve(b);
}

DenseMatrix inverse(const DenseMatrix& a) {
    return LuDecomposition(a).solve(DenseMatrix::identity(a.rows()));
}

} // namespace eigrefine
