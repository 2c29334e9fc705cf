#include "eigrefine/fixedpoint.hpp"

#include <algorithm>
#include <cmath>

namespace eigrefine {

std::vector<double> StateVector::packed() const {
    std::vector<double> z;
    z.reserve(dim());
    z.insert(z.end(), f.entries().begin(), f.entries().end());
    z.insert(z.end(), d.values().begin(), d.values().end());
    return z;
}

StateVector StateVector::from_packed(std::size_t n, const std::vector<double>& z) {
    if (z.size() != n * n + n) throw DimensionError("StateVector: packed length != n^2 + n");
    DenseMatrix f(n, n, std::vector<double>(z.begin(), z.begin() + static_cast<long>(n * n)));
    DiagMatrix d(std::vector<double>(z.begin() + static_cast<long>(n * n), z.end()));
    return {std::move(f), std::move(d)};
}

double StateVector::norm() const {
    double s = 0.0;
    for (double v : f.entries()) s += v * v;
    for (double v : d.values()) s += v * v;
    return std::sqrt(s);
}

double distance(const StateVector& a, const StateVector& b) {
    if (a.order() != b.order()) throw DimensionError("distance: state orders differ");
    double s = 0.0;
    for (std::size_t k = 0; k < a.f.entries().size(); ++k) {
        const double t = a.f.entries()[k] - b.f.entries()[k];
        s += t * t;
    }
    for (std::size_t k = 0; k < a.d.size(); ++k) {
        const double t = a.d[k] - b.d[k];
        s += t * t;
    }
    return std::sqrt(s);
}

ProblemData make_problem_data(const ResidualPair& rs, ClusterMap clusters, double eta,
                              double norm_a) {
    if (clusters.n() != rs.n()) throw DimensionError("make_problem_data: cluster map order");
    if (clusters.group_count() >= 2 && !(eta > 0.0)) {
        throw HypothesisError("make_problem_data: eta must be positive with >= 2 clusters");
    }
    return {rs.r, rs.s, std::move(clusters), eta, norm_a};
}

namespace {

void require_contraction_domain(const DenseMatrix& e) {
    if (e.rows() != e.cols()) throw DimensionError("delta_map: matrix not square");
    const double s2 = spectral_norm(e);
    if (s2 >= 1.0) throw NumericError("delta_map: ||E||_2 >= 1, I + E not safely invertible");
}

// Delta(E) = E^2 (I+E)^{-1}, via (I+E)^T Y^T = (E^2)^T.
DenseMatrix delta_unchecked(const DenseMatrix& e) {
    const std::size_t n = e.rows();
    DenseMatrix ipe = DenseMatrix::identity(n) + e;
    DenseMatrix e2 = matmul(e, e);
    DenseMatrix yt = lu_solve(ipe.transposed(), e2.transposed());
    return yt.transposed();
}

SymMatrix assemble_delta1(const DenseMatrix& e, const DenseMatrix& delta) {
    const std::size_t n = e.rows();
    const DenseMatrix m = e - delta;
    const DenseMatrix g = matmul(m.transposed(), m);  // exactly symmetric
    DenseMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = (delta(i, j) + delta(j, i)) + g(i, j);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return SymMatrix(std::move(out));
}

SymMatrix assemble_delta2(const DenseMatrix& e, const DiagMatrix& d, const DenseMatrix& delta) {
    const std::size_t n = e.rows();
    if (d.size() != n) throw DimensionError("delta2_map: diagonal order mismatch");
    const DenseMatrix m = e - delta;
    DenseMatrix dm(n, n);  // D (E - Delta)
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) dm(i, j) = d[i] * m(i, j);
    const DenseMatrix t = matmul(m.transposed(), dm);  // (E-Delta)^T D (E-Delta)
    DenseMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double p = d[i] * delta(i, j) + d[j] * delta(j, i);  // (D Delta + (D Delta)^T)_ij
            const double v = -p - 0.5 * (t(i, j) + t(j, i));
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return SymMatrix(std::move(out));
}

} // namespace

DenseMatrix delta_map(const DenseMatrix& e) {
    require_contraction_domain(e);
    return delta_unchecked(e);
}

SymMatrix delta1_map(const DenseMatrix& e) {
    require_contraction_domain(e);
    return assemble_delta1(e, delta_unchecked(e));
}

SymMatrix delta2_map(const DenseMatrix& e, const DiagMatrix& d) {
    require_contraction_domain(e);
    return assemble_delta2(e, d, delta_unchecked(e));
}

StateVector fmap(const StateVector& z, const ProblemData& pd) {
    const std::size_t n = z.order();
    if (pd.n() != n || z.f.rows() != n || z.f.cols() != n) {
        throw DimensionError("fmap: state and problem orders differ");
    }
    require_contraction_domain(z.f);
    const DenseMatrix delta = delta_unchecked(z.f);
    const SymMatrix d1 = assemble_delta1(z.f, delta);
    const SymMatrix d2 = assemble_delta2(z.f, z.d, delta);

    DiagMatrix dh(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = 1.0 - pd.r(i, i) - d1(i, i);
        if (denom <= 0.5) {
            throw BadState("fmap: diagonal denominator 1 - r_ii - Delta1_ii <= 0.5");
        }
        dh[i] = (pd.s(i, i) + d2(i, i)) / denom;
    }

    const double floor = 1e2 * kUnitRoundoff * z.d.max_abs();
    DenseMatrix fh(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (pd.clusters.same_cluster(i, j)) {
                fh(i, j) = (pd.r(i, j) + d1(i, j)) / 2.0;
            } else {
                const double gap = z.d[j] - z.d[i];
                if (std::fabs(gap) <= floor) {
                    throw NearSingularDenominator(
                        "fmap: cross-cluster eigenvalue gap at rounding floor",
                        static_cast<int>(i), static_cast<int>(j), std::fabs(gap));
                }
                fh(i, j) = (pd.s(i, j) + d2(i, j) + z.d[j] * (pd.r(i, j) + d1(i, j))) / gap;
            }
        }
    }
    return {std::move(fh), std::move(dh)};
}

double default_fd_step(const StateVector& z) { return 1e-6 * (1.0 + z.norm()); }

DenseMatrix fd_jacobian(const std::function<StateVector(const StateVector&)>& map,
                        const StateVector& z, double h) {
    if (!(h > 0.0)) throw Error("fd_jacobian: step must be positive");
    const std::size_t n = z.order();
    const std::size_t dim = z.dim();
    const std::vector<double> base = z.packed();
    DenseMatrix jac(dim, dim);
    std::vector<double> probe = base;
    for (std::size_t k = 0; k < dim; ++k) {
        std::vector<double> fp, fm;
        try {
            probe[k] = base[k] + h;
            fp = map(StateVector::from_packed(n, probe)).packed();
            probe[k] = base[k] - h;
            fm = map(StateVector::from_packed(n, probe)).packed();
        } catch (const Error& err) {
            throw NumericError("fd_jacobian: map failed at probe coordinate " +
                               std::to_string(k) + ": " + err.what());
        }
        probe[k] = base[k];
        for (std::size_t rr = 0; rr < dim; ++rr) jac(rr, k) = (fp[rr] - fm[rr]) / (2.0 * h);
    }
    return jac;
}

DenseMatrix fd_jacobian(const ProblemData& pd, const StateVector& z, double h) {
    if (h <= 0.0) h = default_fd_step(z);
    return fd_jacobian([&pd](const StateVector& w) { return fmap(w, pd); }, z, h);
}

void BoundReport::add(std::string name, double lhs, double rhs) {
    records.push_back({std::move(name), lhs, rhs, lhs <= rhs, rhs - lhs});
}

bool BoundReport::all_satisfied() const {
    return std::all_of(records.begin(), records.end(),
                       [](const BoundRecord& r) { return r.satisfied; });
}

const BoundRecord* BoundReport::find(const std::string& name) const {
    for (const auto& r : records)
        if (r.name == name) return &r;
    return nullptr;
}

BoundReport check_remainder_bounds(const DenseMatrix& f, const DiagMatrix& d,
                                   const RemainderBoundsOptions& opts) {
    const std::size_t n = f.rows();
    if (f.cols() != n || d.size() != n) throw DimensionError("check_remainder_bounds: shapes");
    const double norm_f = spectral_norm(f);
    if (norm_f >= 0.1) {
        throw HypothesisError("check_remainder_bounds: requires ||F||_2 < 1/10");
    }
    if (opts.pd != nullptr && !(opts.fstar_norm < 0.1)) {
        throw HypothesisError("check_remainder_bounds: residual records require ||F*||_2 < 1/10");
    }
    const double norm_d = d.max_abs();

    BoundReport report;
    const DenseMatrix delta = delta_unchecked(f);
    report.add("delta1_norm", spectral_norm(assemble_delta1(f, delta).dense()), 0.5 * norm_f);
    report.add("delta2_norm", spectral_norm(assemble_delta2(f, d, delta).dense()),
               0.5 * norm_d * norm_f);

    // entrywise derivatives of Delta1 and Delta2 w.r.t. f_kl, central differences
    const double hf = opts.fd_step_scale * (1.0 + frobenius_norm(f));
    double max_d1 = 0.0, max_d2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            DenseMatrix ep = f, em = f;
            ep(k, l) += hf;
            em(k, l) -= hf;
            const DenseMatrix dp = delta_unchecked(ep);
            const DenseMatrix dm = delta_unchecked(em);
            const DenseMatrix d1p = assemble_delta1(ep, dp).dense();
            const DenseMatrix d1m = assemble_delta1(em, dm).dense();
            const DenseMatrix d2p = assemble_delta2(ep, d, dp).dense();
            const DenseMatrix d2m = assemble_delta2(em, d, dm).dense();
            for (std::size_t idx = 0; idx < n * n; ++idx) {
                max_d1 = std::max(max_d1, std::fabs(d1p.entries()[idx] - d1m.entries()[idx]));
                max_d2 = std::max(max_d2, std::fabs(d2p.entries()[idx] - d2m.entries()[idx]));
            }
        }
    }
    report.add("d_delta1_df", max_d1 / (2.0 * hf), 9.0 * norm_f + opts.fd_noise_abs);
    report.add("d_delta2_df", max_d2 / (2.0 * hf), 9.0 * norm_d * norm_f + opts.fd_noise_abs);

    const double hd = opts.fd_step_scale * (1.0 + frobenius_norm(d));
    double max_d2d = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        DiagMatrix dp = d, dm = d;
        dp[k] += hd;
        dm[k] -= hd;
        const DenseMatrix p = assemble_delta2(f, dp, delta).dense();
        const DenseMatrix q = assemble_delta2(f, dm, delta).dense();
        for (std::size_t idx = 0; idx < n * n; ++idx) {
            max_d2d = std::max(max_d2d, std::fabs(p.entries()[idx] - q.entries()[idx]));
        }
    }
    report.add("d_delta2_dd", max_d2d / (2.0 * hd), 4.0 * norm_f * norm_f + opts.fd_noise_abs);

    if (opts.pd != nullptr) {
        const ProblemData& pd = *opts.pd;
        double max_r = 0.0, max_s_off = 0.0, max_s_diag = 0.0;
        for (std::size_t i = 0; i < pd.n(); ++i) {
            for (std::size_t j = 0; j < pd.n(); ++j) {
                max_r = std::max(max_r, std::fabs(pd.r(i, j)));
                if (i == j) {
                    max_s_diag = std::max(max_s_diag, std::fabs(pd.s(i, i)));
                } else {
                    max_s_off = std::max(max_s_off, std::fabs(pd.s(i, j)));
                }
            }
        }
        report.add("r_entry", max_r, 2.5 * opts.fstar_norm);
        report.add("s_offdiag_entry", max_s_off, 2.5 * pd.norm_a * opts.fstar_norm);
        report.add("s_diag_entry", max_s_diag, 1.25 * pd.norm_a);
    }
    return report;
}

BoundReport check_map_derivative_bounds(const ProblemData& pd, const StateVector& z,
                                        double fstar_norm, const StateVector& zstar,
                                        double delta, const MapDerivativeBoundsOptions& opts) {
    const std::size_t n = z.order();
    if (!(fstar_norm < 0.05)) {
        throw HypothesisError("check_map_derivative_bounds: requires ||F*||_2 < 1/20");
    }
    const double delta_cap = std::min(pd.eta / 3.0, fstar_norm);
    if (delta > 0.0 && !(delta < delta_cap)) {
        throw HypothesisError(
            "check_map_derivative_bounds: requires delta < min(eta/3, ||F*||_2)");
    }
    if (distance(z, zstar) > delta * (1.0 + 1e-9) + 1e-300) {
        throw HypothesisError("check_map_derivative_bounds: z outside the delta-ball of z*");
    }

    const DenseMatrix jac = fd_jacobian(pd, z, opts.fd_step);

    const double b_ff_within = 9.0 * fstar_norm;
    const double b_ff_cross = 216.0 / pd.eta * pd.norm_a * fstar_norm;
    const double b_fd_cross =
        3.0 / pd.eta * (4.3 + 34.5 * pd.norm_a / pd.eta) * fstar_norm;
    const double b_df = 9600.0 / 121.0 * pd.norm_a * fstar_norm;
    const double b_dd = 32.0 / 33.0 * fstar_norm;

    double m_ff_within = 0.0, m_fd_within = 0.0, m_ff_cross = 0.0, m_fd_cross = 0.0;
    double m_df = 0.0, m_dd = 0.0;
    const std::size_t nf = n * n;
    for (std::size_t row = 0; row < jac.rows(); ++row) {
        const bool row_is_f = row < nf;
        const bool within =
            row_is_f && pd.clusters.same_cluster(row / n, row % n);
        for (std::size_t col = 0; col < jac.cols(); ++col) {
            const double v = std::fabs(jac(row, col));
            const bool col_is_f = col < nf;
            if (row_is_f) {
                double& slot = col_is_f ? (within ? m_ff_within : m_ff_cross)
                                        : (within ? m_fd_within : m_fd_cross);
                slot = std::max(slot, v);
            } else if (col_is_f) {
                m_df = std::max(m_df, v);
            } else {
                m_dd = std::max(m_dd, v);
            }
        }
    }

    BoundReport report;
    const double noise = opts.fd_noise_abs;
    report.add("df_hat_df_within", m_ff_within, b_ff_within + noise);
    report.add("df_hat_dd_within", m_fd_within, opts.zero_tol);
    report.add("df_hat_df_cross", m_ff_cross, b_ff_cross + noise);
    report.add("df_hat_dd_cross", m_fd_cross, b_fd_cross + noise);
    report.add("dd_hat_df", m_df, b_df + noise);
    report.add("dd_hat_dd", m_dd, b_dd + noise);
    return report;
}

StateVector sample_in_ball(const StateVector& zstar, double delta, std::mt19937_64& rng) {
    const std::size_t dim = zstar.dim();
    std::vector<double> z = zstar.packed();
    if (delta > 0.0) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<double> dir(dim);
        double norm2 = 0.0;
        for (double& v : dir) {
            v = gauss(rng);
            norm2 += v * v;
        }
        const double norm = std::sqrt(norm2);
        const double radius =
            delta * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
        if (norm > 0.0) {
            for (std::size_t k = 0; k < dim; ++k) z[k] += radius * dir[k] / norm;
        }
    }
    return StateVector::from_packed(zstar.order(), z);
}

ContractionReport contraction_probe(const ProblemData& pd, const StateVector& zstar,
                                    double delta, std::size_t samples, std::uint64_t seed) {
    if (!(delta < pd.eta / 3.0)) {
        throw HypothesisError("contraction_probe: requires delta < eta/3");
    }
    std::mt19937_64 rng(seed);
    ContractionReport rep;
    rep.delta = delta;
    rep.samples = samples;

    std::optional<StateVector> prev_z;
    std::optional<StateVector> prev_fz;
    for (std::size_t i = 0; i < samples; ++i) {
        const StateVector z = sample_in_ball(zstar, delta, rng);
        try {
            const DenseMatrix jac = fd_jacobian(pd, z, 0.0);
            rep.jacobian_frobenius_max =
                std::max(rep.jacobian_frobenius_max, frobenius_norm(jac));
            const StateVector fz = fmap(z, pd);
            if (prev_z) {
                const double dz = distance(z, *prev_z);
                if (dz > 0.0) {
                    rep.contraction_factor_estimate = std::max(
                        rep.contraction_factor_estimate, distance(fz, *prev_fz) / dz);
                }
            }
            prev_z = z;
            prev_fz = fz;
        } catch (const Error& err) {
            throw NumericError(std::string("contraction_probe: map failed inside the ball "
                                           "(ball too large for the instance): ") +
                               err.what());
        }
    }
    rep.is_contraction = rep.jacobian_frobenius_max < 1.0;
    return rep;
}

PicardResult picard_iterate(const ProblemData& pd, const StateVector& z0, std::size_t iters) {
    PicardResult res{z0, {}};
    res.residuals.reserve(iters);
    for (std::size_t k = 0; k < iters; ++k) {
        StateVector next;
        try {
            next = fmap(res.z, pd);
        } catch (const Error& err) {
            throw PicardError(std::string("picard_iterate: map failed at step ") +
                                  std::to_string(k) + ": " + err.what(),
                              std::move(res.residuals));
        }
        res.residuals.push_back(distance(next, res.z));
        res.z = std::move(next);
    }
    return res;
}

} // namespace eigrefine
