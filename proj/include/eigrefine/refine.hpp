#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eigrefine/matkit.hpp"
#include "eigrefine/types.hpp"

namespace eigrefine {

/// Candidate eigendecomposition: approximate orthogonal eigenvector matrix X
/// and approximate eigenvalues d aligned with its columns.
struct EigenApprox {
    DenseMatrix x;
    DiagMatrix d;
};

/// Residual pair of a candidate X for a symmetric A:
///   R = I - X^T X   (orthogonality defect)
///   S = X^T A X     (diagonalization defect off the diagonal)
/// Both are exactly symmetrized after the products.
struct ResidualPair {
    SymMatrix r;
    SymMatrix s;
    AccumMode mode = AccumMode::Working;
    std::size_t n() const { return r.n(); }
};

/// Assignment of each index to an eigenvalue cluster. Cluster ids are dense,
/// 0..group_count-1, ordered by ascending eigenvalue. Carries the threshold it
/// was built with so consumers can detect stale maps.
struct ClusterMap {
    std::vector<int> assign;
    std::vector<std::size_t> sizes;
    double delta1 = 0.0;

    std::size_t n() const { return assign.size(); }
    std::size_t group_count() const { return sizes.size(); }
    bool same_cluster(std::size_t i, std::size_t j) const { return assign[i] == assign[j]; }
    /// Indices belonging to cluster k.
    std::vector<std::size_t> members(int k) const;
    static ClusterMap singletons(std::size_t n);
};

/// Correction E with the contract X_new = X (I + E); dnew carries the
/// approximate eigenvalues computed alongside. clusters is present iff the
/// correction came from the cluster-aware step.
struct Correction {
    DenseMatrix e;
    DiagMatrix dnew;
    std::optional<ClusterMap> clusters;
};

enum class StepKind { Basic, Clustered };

enum class StopReason { Converged, Stagnated, MaxIters, Breakdown };

std::string to_string(StopReason r);

struct RefineConfig {
    std::optional<double> delta1;  ///< cluster threshold; nullopt = adaptive default
    std::size_t max_iters = 20;
    double stop_tol = 1e-14;       ///< on ||E||_F
    AccumMode mode = AccumMode::Working;
    StepKind step_kind = StepKind::Basic;
};

struct TraceRecord {
    std::size_t iter = 0;
    double r_norm = 0.0;
    double s_off_norm = 0.0;
    double e_norm = 0.0;
    std::optional<double> err_vs_ref;
    double seconds = 0.0;
};

struct ConvergenceTrace {
    std::vector<TraceRecord> records;
};

struct RefineResult {
    EigenApprox approx;
    ConvergenceTrace trace;
    StopReason stop = StopReason::MaxIters;
    std::string stop_detail;  ///< populated on Breakdown with the step error message
};

/// Residuals R = I - X^T X and S = X^T A X in the requested accumulation mode,
/// exactly symmetrized.
ResidualPair residuals(const SymMatrix& a, const DenseMatrix& x, AccumMode mode);

/// Approximate eigenvalues d_i = s_ii / (1 - r_ii) read off a residual pair.
DiagMatrix approx_eigenvalues(const ResidualPair& rs);

/// Plain linearized correction:
///   e_ii = r_ii / 2,  d_i = s_ii / (1 - r_ii),
///   e_ij = (s_ij + d_j r_ij) / (d_j - d_i)   (i != j).
/// Throws BreakdownNearMultiple when |d_j - d_i| falls to the separation floor
/// (default 1e2 * u * max|d|) and BadApproximation when |1 - r_ii| <= 0.5.
Correction basic_step(const ResidualPair& rs);

/// Partition indices by sorted-gap clustering of the approximate eigenvalues:
/// a new cluster starts whenever a consecutive sorted gap is >= delta1.
ClusterMap detect_clusters(const DiagMatrix& d, double delta1);

/// Adaptive default threshold for detect_clusters. Scales with both rounding
/// noise and the square of the current residual, which is the size of the
/// spread the linearization leaves inside a cluster.
double default_delta1(const ResidualPair& rs);

/// Cluster-aware correction: within a cluster f_ij = r_ij / 2 (symmetric),
/// across clusters the plain quotient formula. Reduces bitwise to basic_step
/// for all-singleton maps. Throws InconsistentClusters when a cross-cluster
/// pair sits closer than delta1 / 2.
Correction clustered_step(const ResidualPair& rs, const ClusterMap& clusters);

/// X + X E, i.e. X (I + E) with the update added onto X entrywise.
DenseMatrix apply_correction(const DenseMatrix& x, const Correction& c);

/// Full refinement driver. Stops on stop_tol, stagnation at the precision
/// floor, max_iters, or breakdown of the step (reported, not thrown).
RefineResult refine_loop(const SymMatrix& a, const DenseMatrix& x0, const RefineConfig& cfg,
                         const DenseMatrix* x_ref = nullptr);

} // namespace eigrefine
