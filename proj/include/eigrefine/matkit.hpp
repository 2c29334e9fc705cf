#pragma once

#include <cstdint>
#include <vector>

#include "eigrefine/types.hpp"

namespace eigrefine {

/// Standard matrix product in working precision.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

/// Matrix product with the requested accumulation mode. In Compensated mode
/// each entry is the dot product evaluated with error-free transformations
/// (two-product + cascaded two-sum) and rounded once to binary64; in Working
/// mode the result is bitwise identical to matmul().
DenseMatrix accurate_product(const DenseMatrix& a, const DenseMatrix& b, AccumMode mode);

/// Compensated dot product of two strided ranges, rounded once.
double dot_compensated(const double* x, std::size_t x_stride,
                       const double* y, std::size_t y_stride, std::size_t n);

double frobenius_norm(const DenseMatrix& m);
double frobenius_norm(const SymMatrix& m);
double frobenius_norm(const DiagMatrix& d);

/// Frobenius norm of the off-diagonal part.
double offdiag_frobenius(const DenseMatrix& m);
double offdiag_frobenius(const SymMatrix& m);

double max_abs(const DenseMatrix& m);

struct SpectralNormOptions {
    double rel_tol = 1e-10;
    std::size_t max_iters = 100000;
};

/// Largest singular value via power iteration on M^T M with a deterministic
/// all-ones start vector. Throws ConvergenceError (carrying the best estimate)
/// if the iteration does not settle.
double spectral_norm(const DenseMatrix& m, const SpectralNormOptions& opts = {});
double spectral_norm(const SymMatrix& m, const SpectralNormOptions& opts = {});

struct JacobiResult {
    DenseMatrix q;       ///< orthogonal eigenvector matrix, columns match lambda
    DiagMatrix lambda;   ///< eigenvalues sorted ascending
};

struct JacobiOptions {
    std::size_t size_limit = 64;
    std::size_t max_sweeps = 60;
    double off_tol = 1e-14;  ///< stop when off(A) <= off_tol * ||A||_F
};

/// Cyclic Jacobi eigensolver for small dense symmetric matrices. Used as an
/// independent reference in tests and instance generation.
JacobiResult jacobi_eigen(const SymMatrix& a, const JacobiOptions& opts = {});

/// LU factorization with partial pivoting.
class LuDecomposition {
public:
    explicit LuDecomposition(DenseMatrix a);

    /// Solve A X = B.
    DenseMatrix solve(const DenseMatrix& b) const;
    double min_pivot_abs() const { return min_pivot_abs_; }

private:
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;
    double min_pivot_abs_ = 0.0;
};

/// Solve A X = B by LU with partial pivoting.
DenseMatrix lu_solve(const DenseMatrix& a, const DenseMatrix& b);

/// Matrix inverse by LU, for small well-conditioned systems.
DenseMatrix inverse(const DenseMatrix& a);

} // namespace eigrefine
