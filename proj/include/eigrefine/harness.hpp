#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eigrefine/fixedpoint.hpp"
#include "eigrefine/refine.hpp"
#include "eigrefine/types.hpp"

#include "json.hpp"

namespace eigrefine {

/// Prescribed spectrum: distinct eigenvalues with multiplicities, plus the
/// seed all instance randomness flows from. Values are kept sorted ascending.
struct SpectrumSpec {
    std::vector<std::pair<double, std::size_t>> values;
    std::uint64_t seed = 0;

    /// Parses "1x3,2x3" or "1,2.5,4" (bare values mean multiplicity 1).
    static SpectrumSpec parse(const std::string& text, std::uint64_t seed);

    void validate() const;
    std::size_t n() const;
    std::vector<double> expanded() const;  ///< eigenvalues ascending, with multiplicity
    double eta() const;                    ///< min gap between distinct values; inf if one value
    ClusterMap clusters() const;           ///< contiguous ascending cluster map
    std::string to_string() const;
};

/// A generated test problem: A = Q Lambda Q^T with known eigenvector matrix,
/// a perturbed candidate Xtilde and the canonical correction Fstar whose
/// within-cluster blocks are symmetric.
struct Instance {
    SymMatrix a;
    DenseMatrix xtrue;
    DenseMatrix xtilde;
    DenseMatrix fstar;
    DiagMatrix dstar;
    double eta = 0.0;
    ClusterMap clusters_true;

    std::string spec_string;
    std::uint64_t seed = 0;
    double perturbation = 0.0;
    double norm_a = 0.0;      ///< ||A||_2 = max |lambda|, exact from the spectrum
    double fstar_norm = 0.0;  ///< ||Fstar||_2 estimate

    std::size_t n() const { return a.n(); }
    /// The exact eigenvector matrix the canonical correction points at.
    DenseMatrix canonical_limit() const;
    /// Throws if any construction invariant fails.
    void validate() const;
};

/// Builds an instance: random orthogonal Q from n seeded Householder
/// reflectors, A = Q Lambda Q^T, Xtilde = Xtrue (I + P)^{-1} with ||P||_2
/// scaled to `perturbation`, then the canonical correction.
Instance gen_instance(const SpectrumSpec& spec, double perturbation);

/// The unique correction with symmetric within-cluster blocks taking xtilde to
/// an eigenvector matrix spanning the same cluster subspaces as xtrue. Built
/// from per-cluster polar factors of xtilde^{-1} xtrue.
DenseMatrix canonical_correction(const DenseMatrix& xtilde, const DenseMatrix& xtrue,
                                 const ClusterMap& clusters);

struct ExperimentResult {
    // instance descriptor
    std::string spec;
    std::uint64_t seed = 0;
    double perturbation = 0.0;
    std::size_t n = 0;
    double eta = 0.0;
    double norm_a = 0.0;
    double fstar_norm = 0.0;

    // refinement section
    std::optional<RefineConfig> config;
    std::optional<RefineResult> refine;
    std::vector<double> order_estimates;  ///< log e_{k+1} / log e_k on usable steps
    std::optional<double> refine_vs_fstar;  ///< ||Xtilde^{-1} X_inf - (I + F*)||_F

    // fixed-point section
    std::optional<double> delta;
    std::optional<BoundReport> remainder_bounds;
    std::optional<BoundReport> derivative_bounds;  ///< family-wise worst over samples
    std::optional<ContractionReport> contraction;
    std::optional<double> fixed_point_residual;    ///< ||fmap(z*) - z*||
    std::optional<double> picard_pairwise_max;
    std::optional<double> picard_vs_star_max;
    std::optional<double> refine_vs_picard;
    std::vector<std::string> hypothesis_notes;     ///< sub-checks skipped, with reason

    double seconds = 0.0;
};

/// Generate an instance and refine it, recording per-step convergence-order
/// estimates and the distance of the limit from the canonical correction.
ExperimentResult run_convergence(const SpectrumSpec& spec, double perturbation,
                                 const RefineConfig& cfg);

/// Full fixed-point verification: remainder bounds at z*, derivative bounds at
/// sampled states, contraction probe, fixed-point residual and the picard /
/// refinement cross-checks. Requires delta < eta/3; hypothesis failures of
/// sub-checks are recorded in hypothesis_notes rather than thrown.
ExperimentResult run_fixedpoint_suite(const SpectrumSpec& spec, double perturbation,
                                      double delta, std::size_t samples);

/// Per-step convergence-order estimates log e_{k+1} / log e_k, restricted to
/// steps inside the contraction basin and above the precision floor.
std::vector<double> order_estimates(const ConvergenceTrace& trace, std::size_t n,
                                    double norm_scale);

void write_trace_csv(const std::filesystem::path& path, const ConvergenceTrace& trace);

nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const ContractionReport& report);
nlohmann::json to_json(const RefineConfig& cfg);
nlohmann::json to_json(const ExperimentResult& result);

} // namespace eigrefine
