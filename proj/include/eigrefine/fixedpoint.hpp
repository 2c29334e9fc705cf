#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "eigrefine/refine.hpp"
#include "eigrefine/types.hpp"

namespace eigrefine {

/// Pair (F, D) viewed as a vector in R^(n^2 + n): row-major F first, then the
/// n diagonal values.
struct StateVector {
    DenseMatrix f;
    DiagMatrix d;

    std::size_t order() const { return d.size(); }
    std::size_t dim() const { return order() * order() + order(); }

    std::vector<double> packed() const;
    static StateVector from_packed(std::size_t n, const std::vector<double>& z);

    double norm() const;
};

/// Euclidean distance between two states of equal order.
double distance(const StateVector& a, const StateVector& b);

/// Constant data of one fixed-point problem: residual pair, cluster map,
/// minimum gap eta between distinct eigenvalues and a 2-norm estimate of A.
struct ProblemData {
    SymMatrix r;
    SymMatrix s;
    ClusterMap clusters;
    double eta = 0.0;
    double norm_a = 0.0;

    std::size_t n() const { return r.n(); }
};

ProblemData make_problem_data(const ResidualPair& rs, ClusterMap clusters, double eta,
                              double norm_a);

/// Exact remainder of the inverse: Delta(E) = (I+E)^{-1} - I + E, evaluated as
/// E^2 (I+E)^{-1} by a direct LU solve (the two forms are algebraically
/// identical; this one keeps full relative accuracy at small ||E||).
DenseMatrix delta_map(const DenseMatrix& e);

/// Delta1(E) = Delta + Delta^T + (E - Delta)^T (E - Delta); symmetric by assembly.
SymMatrix delta1_map(const DenseMatrix& e);

/// Delta2(E, D) = -D Delta - (D Delta)^T - (E - Delta)^T D (E - Delta).
SymMatrix delta2_map(const DenseMatrix& e, const DiagMatrix& d);

/// The fixed-point map z -> z_hat:
///   d_hat_i = (s_ii + Delta2_ii) / (1 - r_ii - Delta1_ii)
///   f_hat_ij = (s_ij + Delta2_ij + d_j (r_ij + Delta1_ij)) / (d_j - d_i)   across clusters
///   f_hat_ij = (r_ij + Delta1_ij) / 2                                     within a cluster
StateVector fmap(const StateVector& z, const ProblemData& pd);

double default_fd_step(const StateVector& z);

/// Central-difference Jacobian of an arbitrary state map, one packed
/// coordinate per column.
DenseMatrix fd_jacobian(const std::function<StateVector(const StateVector&)>& map,
                        const StateVector& z, double h);

/// Central-difference Jacobian of fmap(., pd) at z.
DenseMatrix fd_jacobian(const ProblemData& pd, const StateVector& z, double h = 0.0);

struct BoundRecord {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
    double slack = 0.0;
};

struct BoundReport {
    std::vector<BoundRecord> records;
    void add(std::string name, double lhs, double rhs);
    bool all_satisfied() const;
    const BoundRecord* find(const std::string& name) const;
};

struct RemainderBoundsOptions {
    /// Needed for the residual-entry records; they are skipped when absent.
    const ProblemData* pd = nullptr;
    double fstar_norm = 0.0;
    double fd_step_scale = 1e-6;
    double fd_noise_abs = 1e-8;  ///< absolute allowance on finite-difference records
};

/// Checks the remainder inequalities that hold for ||F||_2 < 1/10:
///   ||Delta1(F)||_2            <= (1/2) ||F||_2
///   ||Delta2(F,D)||_2          <= (1/2) ||D||_2 ||F||_2
///   |d(Delta1)_ij / d f_kl|    <= 9 ||F||_2
///   |d(Delta2)_ij / d f_kl|    <= 9 ||D||_2 ||F||_2
///   |d(Delta2)_ij / d d_k|     <= 4 ||F||_2^2
/// and, when problem data is supplied (requires ||F*||_2 < 1/10):
///   |r_ij| <= (5/2) ||F*||_2
///   |s_ij| <= (5/2) ||A||_2 ||F*||_2 (i != j),  |s_ii| <= (5/4) ||A||_2
/// Derivative left-hand sides are measured by central differences.
BoundReport check_remainder_bounds(const DenseMatrix& f, const DiagMatrix& d,
                                   const RemainderBoundsOptions& opts = {});

struct MapDerivativeBoundsOptions {
    double fd_step = 0.0;           ///< 0 = default_fd_step(z)
    double zero_tol = 1e-12;        ///< allowance for the exactly-zero family
    double fd_noise_abs = 1e-8;     ///< absolute finite-difference allowance
};

/// Checks the six entry families of the fixed-point map Jacobian at z, valid
/// for ||F*||_2 < 1/20, delta < min(eta/3, ||F*||_2) and z in the delta-ball
/// around zstar:
///   |df_hat_ij/df_kl| <= 9 ||F*||               (within cluster)
///   |df_hat_ij/dd_k|   = 0                      (within cluster)
///   |df_hat_ij/df_kl| <= (216/eta)||A|| ||F*||  (across clusters)
///   |df_hat_ij/dd_k|  <= (3/eta)(43/10 + (69/2)||A||/eta)||F*||  (across)
///   |dd_hat_i/df_kl|  <= (9600/121)||A|| ||F*||
///   |dd_hat_i/dd_k|   <= (32/33)||F*||
BoundReport check_map_derivative_bounds(const ProblemData& pd, const StateVector& z,
                                        double fstar_norm, const StateVector& zstar,
                                        double delta,
                                        const MapDerivativeBoundsOptions& opts = {});

struct ContractionReport {
    double delta = 0.0;
    std::size_t samples = 0;
    double jacobian_frobenius_max = 0.0;
    double contraction_factor_estimate = 0.0;
    bool is_contraction = false;
};

/// Uniform sample from the closed ball of radius delta around zstar.
StateVector sample_in_ball(const StateVector& zstar, double delta, std::mt19937_64& rng);

/// Samples the ball around zstar, reports the largest finite-difference
/// Jacobian Frobenius norm and the largest empirical Lipschitz quotient over
/// consecutive sample pairs. Requires delta < eta/3.
ContractionReport contraction_probe(const ProblemData& pd, const StateVector& zstar,
                                    double delta, std::size_t samples, std::uint64_t seed);

struct PicardResult {
    StateVector z;
    std::vector<double> residuals;  ///< ||fmap(z_k) - z_k|| per step
};

/// Thrown when the map fails along the orbit; carries the partial trace.
class PicardError : public Error {
public:
    PicardError(const std::string& msg, std::vector<double> partial)
        : Error(msg), residuals(std::move(partial)) {}
    std::vector<double> residuals;
};

/// Fixed-point iteration z_{k+1} = fmap(z_k).
PicardResult picard_iterate(const ProblemData& pd, const StateVector& z0, std::size_t iters);

} // namespace eigrefine
