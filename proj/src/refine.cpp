#include "eigrefine/refine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace eigrefine {

std::vector<std::size_t> ClusterMap::members(int k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assign.size(); ++i)
        if (assign[i] == k) out.push_back(i);
    return out;
}

ClusterMap ClusterMap::singletons(std::size_t n) {
    ClusterMap cm;
    cm.assign.resize(n);
    std::iota(cm.assign.begin(), cm.assign.end(), 0);
    cm.sizes.assign(n, 1);
    cm.delta1 = 0.0;
    return cm;
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::Converged: return "converged";
        case StopReason::Stagnated: return "stagnated";
        case StopReason::MaxIters: return "max_iters";
        case StopReason::Breakdown: return "breakdown";
    }
    return "unknown";
}

ResidualPair residuals(const SymMatrix& a, const DenseMatrix& x, AccumMode mode) {
    if (x.rows() != x.cols() || x.rows() != a.n()) {
        throw DimensionError("residuals: X must be square of the same order as A");
    }
    const std::size_t n = a.n();
    const DenseMatrix xt = x.transposed();
    DenseMatrix g = accurate_product(xt, x, mode);
    DenseMatrix r(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) r(i, j) = (i == j ? 1.0 : 0.0) - g(i, j);
    DenseMatrix s = accurate_product(xt, accurate_product(a.dense(), x, mode), mode);
    return {SymMatrix(std::move(r)), SymMatrix(std::move(s)), mode};
}

DiagMatrix approx_eigenvalues(const ResidualPair& rs) {
    const std::size_t n = rs.n();
    DiagMatrix d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = rs.s(i, i) / (1.0 - rs.r(i, i));
    return d;
}

namespace {

constexpr double kSeparationFloorFactor = 1e2;

double separation_floor(const DiagMatrix& d) {
    return kSeparationFloorFactor * kUnitRoundoff * d.max_abs();
}

void check_column_norms(const ResidualPair& rs) {
    for (std::size_t i = 0; i < rs.n(); ++i) {
        const double denom = 1.0 - rs.r(i, i);
        if (std::fabs(denom) <= 0.5) {
            throw BadApproximation(
                "correction step: |1 - r_ii| <= 0.5, candidate too far from orthogonal",
                static_cast<int>(i), denom);
        }
    }
}

Correction step_impl(const ResidualPair& rs, const ClusterMap* cm) {
    const std::size_t n = rs.n();
    check_column_norms(rs);
    DiagMatrix d = approx_eigenvalues(rs);
    const double floor = separation_floor(d);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (cm != nullptr && cm->same_cluster(i, j)) continue;
            const double gap = std::fabs(d[j] - d[i]);
            if (cm != nullptr && gap < 0.5 * cm->delta1) {
                throw InconsistentClusters(
                    "clustered step: cross-cluster eigenvalue gap below delta1/2, stale map",
                    static_cast<int>(i), static_cast<int>(j), gap);
            }
            if (gap <= floor) {
                throw BreakdownNearMultiple(
                    "correction step: approximate eigenvalues too close to separate",
                    static_cast<int>(i), static_cast<int>(j), gap, floor);
            }
        }
    }

    DenseMatrix e(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                e(i, i) = rs.r(i, i) / 2.0;
            } else if (cm != nullptr && cm->same_cluster(i, j)) {
                e(i, j) = rs.r(i, j) / 2.0;
            } else {
                e(i, j) = (rs.s(i, j) + d[j] * rs.r(i, j)) / (d[j] - d[i]);
            }
        }
    }

    Correction c{std::move(e), std::move(d), std::nullopt};
    if (cm != nullptr) c.clusters = *cm;
    return c;
}

} // namespace

Correction basic_step(const ResidualPair& rs) { return step_impl(rs, nullptr); }

Correction clustered_step(const ResidualPair& rs, const ClusterMap& clusters) {
    if (clusters.n() != rs.n()) {
        throw DimensionError("clustered_step: cluster map order does not match residuals");
    }
    return step_impl(rs, &clusters);
}

ClusterMap detect_clusters(const DiagMatrix& d, double delta1) {
    if (delta1 < 0.0) throw Error("detect_clusters: delta1 must be >= 0");
    const std::size_t n = d.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(d[i])) {
            throw NumericError("detect_clusters: non-finite eigenvalue approximation");
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return d[i] < d[j]; });
    ClusterMap cm;
    cm.assign.assign(n, 0);
    cm.delta1 = delta1;
    int cluster = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0 && d[order[k]] - d[order[k - 1]] >= delta1) ++cluster;
        cm.assign[order[k]] = cluster;
    }
    cm.sizes.assign(static_cast<std::size_t>(cluster) + (n > 0 ? 1 : 0), 0);
    for (int id : cm.assign) ++cm.sizes[static_cast<std::size_t>(id)];
    return cm;
}

double default_delta1(const ResidualPair& rs) {
    const double s_f = frobenius_norm(rs.s);
    const double r_f = frobenius_norm(rs.r);
    return std::max(1e3 * kUnitRoundoff * s_f, 10.0 * s_f * r_f * r_f);
}

DenseMatrix apply_correction(const DenseMatrix& x, const Correction& c) {
    if (x.cols() != c.e.rows()) throw DimensionError("apply_correction: shapes do not conform");
    return x + matmul(x, c.e);
}

RefineResult refine_loop(const SymMatrix& a, const DenseMatrix& x0, const RefineConfig& cfg,
                         const DenseMatrix* x_ref) {
    if (x0.rows() != x0.cols() || x0.rows() != a.n()) {
        throw DimensionError("refine_loop: X0 must be square of the same order as A");
    }
    if (cfg.stop_tol <= 0.0) throw Error("refine_loop: stop_tol must be positive");
    if (cfg.delta1 && *cfg.delta1 < 0.0) throw Error("refine_loop: delta1 must be >= 0");
    if (!x0.is_finite()) throw InvalidMatrixError("refine_loop: X0 has non-finite entries");

    RefineResult res;
    DenseMatrix x = x0;
    DiagMatrix d(a.n());
    double prev_e = std::numeric_limits<double>::infinity();
    bool have_prev = false;

    for (std::size_t k = 0; k < cfg.max_iters; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        ResidualPair rs;
        try {
            rs = residuals(a, x, cfg.mode);
        } catch (const Error& err) {
            res.stop = StopReason::Breakdown;
            res.stop_detail = std::string("residual computation failed: ") + err.what();
            res.approx = {std::move(x), std::move(d)};
            return res;
        }

        if (k == 0) {
            // nonsingularity gate: ||I - X^T X||_2 < 1 implies X invertible
            bool singular = false;
            try {
                singular = frobenius_norm(rs.r) >= 1.0 && spectral_norm(rs.r) >= 1.0;
            } catch (const ConvergenceError& err) {
                singular = err.best_estimate >= 1.0;
            }
            if (singular) {
                res.stop = StopReason::Breakdown;
                res.stop_detail = "initial candidate fails ||I - X^T X||_2 < 1";
                res.approx = {std::move(x), approx_eigenvalues(rs)};
                return res;
            }
        }

        Correction corr;
        try {
            if (cfg.step_kind == StepKind::Basic) {
                corr = basic_step(rs);
            } else {
                const double delta1 = cfg.delta1 ? *cfg.delta1 : default_delta1(rs);
                corr = clustered_step(rs, detect_clusters(approx_eigenvalues(rs), delta1));
            }
        } catch (const Error& err) {
            res.stop = StopReason::Breakdown;
            res.stop_detail = err.what();
            res.approx = {std::move(x), approx_eigenvalues(rs)};
            return res;
        }

        const double e_norm = frobenius_norm(corr.e);
        TraceRecord rec;
        rec.iter = k;
        rec.r_norm = frobenius_norm(rs.r);
        rec.s_off_norm = offdiag_frobenius(rs.s);
        rec.e_norm = e_norm;
        if (x_ref != nullptr) rec.err_vs_ref = frobenius_norm(x - *x_ref);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.trace.records.push_back(rec);

        if (!std::isfinite(e_norm)) {
            res.stop = StopReason::Breakdown;
            res.stop_detail = "correction overflowed to non-finite values";
            res.approx = {std::move(x), std::move(corr.dnew)};
            return res;
        }

        if (e_norm <= cfg.stop_tol) {
            x = apply_correction(x, corr);
            res.stop = StopReason::Converged;
            res.approx = {std::move(x), std::move(corr.dnew)};
            return res;
        }

        // Stagnation marks the precision floor: corrections that stopped
        // shrinking while already small. Large non-shrinking corrections are
        // left to run (they either recover or hit max_iters/breakdown).
        const double stag_gate = 1e-6 * (1.0 + corr.dnew.max_abs());
        if (have_prev && e_norm >= prev_e && e_norm < stag_gate) {
            res.stop = StopReason::Stagnated;
            res.approx = {std::move(x), std::move(corr.dnew)};
            return res;
        }

        x = apply_correction(x, corr);
        d = corr.dnew;
        prev_e = e_norm;
        have_prev = true;
    }

    res.stop = StopReason::MaxIters;
    res.approx = {std::move(x), std::move(d)};
    return res;
}

} // namespace eigrefine
