#include "eigrefine/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "eigrefine/matkit.hpp"
#include "eigrefine/matrix_io.hpp"

namespace eigrefine {

namespace {

constexpr double kMaxPerturbation = 1.0 / 3.0;

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = gauss(rng);
    return m;
}

/// Orthogonal matrix as a product of n Householder reflectors with seeded
/// Gaussian normal vectors.
DenseMatrix random_orthogonal(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMatrix q = DenseMatrix::identity(n);
    std::vector<double> v(n), w(n);
    for (std::size_t reflector = 0; reflector < n; ++reflector) {
        double vtv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = gauss(rng);
            vtv += v[i] * v[i];
        }
        if (vtv == 0.0) continue;
        const double beta = 2.0 / vtv;
        // q <- (I - beta v v^T) q
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += v[i] * q(i, j);
            w[j] = beta * s;
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) q(i, j) -= v[i] * w[j];
    }
    return q;
}

DenseMatrix scale_columns(const DenseMatrix& m, const std::vector<double>& s) {
    DenseMatrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) *= s[j];
    return out;
}

} // namespace

SpectrumSpec SpectrumSpec::parse(const std::string& text, std::uint64_t seed) {
    SpectrumSpec spec;
    spec.seed = seed;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto xpos = item.find_first_of("xX");
        double value = 0.0;
        std::size_t mult = 1;
        try {
            if (xpos == std::string::npos) {
                value = std::stod(item);
            } else {
                value = std::stod(item.substr(0, xpos));
                const long m = std::stol(item.substr(xpos + 1));
                if (m < 1) throw std::invalid_argument("multiplicity");
                mult = static_cast<std::size_t>(m);
            }
        } catch (const std::exception&) {
            throw ParseError("spectrum spec: cannot parse item '" + item + "'", 0);
        }
        spec.values.emplace_back(value, mult);
    }
    spec.validate();
    std::sort(spec.values.begin(), spec.values.end());
    return spec;
}

void SpectrumSpec::validate() const {
    if (values.empty()) throw ParseError("spectrum spec: no eigenvalues", 0);
    for (const auto& [v, m] : values) {
        if (!std::isfinite(v)) throw ParseError("spectrum spec: non-finite eigenvalue", 0);
        if (m < 1) throw ParseError("spectrum spec: multiplicity must be >= 1", 0);
    }
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = i + 1; j < values.size(); ++j)
            if (values[i].first == values[j].first) {
                throw ParseError("spectrum spec: listed eigenvalues must be distinct", 0);
            }
}

std::size_t SpectrumSpec::n() const {
    std::size_t total = 0;
    for (const auto& [v, m] : values) total += m;
    return total;
}

std::vector<double> SpectrumSpec::expanded() const {
    std::vector<std::pair<double, std::size_t>> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(n());
    for (const auto& [v, m] : sorted) out.insert(out.end(), m, v);
    return out;
}

double SpectrumSpec::eta() const {
    std::vector<std::pair<double, std::size_t>> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.size() < 2) return std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < sorted.size(); ++k)
        gap = std::min(gap, sorted[k].first - sorted[k - 1].first);
    return gap;
}

ClusterMap SpectrumSpec::clusters() const {
    std::vector<std::pair<double, std::size_t>> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    ClusterMap cm;
    cm.delta1 = sorted.size() < 2 ? 0.0 : eta() / 2.0;
    int id = 0;
    for (const auto& [v, m] : sorted) {
        cm.assign.insert(cm.assign.end(), m, id);
        cm.sizes.push_back(m);
        ++id;
    }
    return cm;
}

std::string SpectrumSpec::to_string() const {
    std::ostringstream out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k) out << ",";
        out << values[k].first << "x" << values[k].second;
    }
    return out.str();
}

DenseMatrix Instance::canonical_limit() const {
    return xtilde + matmul(xtilde, fstar);
}

void Instance::validate() const {
    const std::size_t nn = n();
    const double a_f = frobenius_norm(a);

    DenseMatrix ax = matmul(a.dense(), xtrue);
    DenseMatrix xl = scale_columns(xtrue, dstar.values());
    if (frobenius_norm(ax - xl) > 1e-12 * a_f) {
        throw NumericError("instance: A Xtrue - Xtrue Lambda exceeds 1e-12 ||A||_F");
    }

    const DenseMatrix y = canonical_limit();
    DenseMatrix g = matmul(y.transposed(), y);
    for (std::size_t i = 0; i < nn; ++i) g(i, i) -= 1.0;
    if (frobenius_norm(g) > 1e-12) {
        throw NumericError("instance: Xtilde (I + F*) departs from orthogonality beyond 1e-12");
    }
    const DenseMatrix yay = matmul(y.transposed(), matmul(a.dense(), y));
    if (offdiag_frobenius(yay) > 1e-11 * a_f) {
        throw NumericError("instance: Xtilde (I + F*) fails to diagonalize A within 1e-11 ||A||_F");
    }

    for (int k = 0; k < static_cast<int>(clusters_true.group_count()); ++k) {
        const auto idx = clusters_true.members(k);
        for (std::size_t a_ = 0; a_ < idx.size(); ++a_)
            for (std::size_t b_ = a_ + 1; b_ < idx.size(); ++b_) {
                if (std::fabs(fstar(idx[a_], idx[b_]) - fstar(idx[b_], idx[a_])) > 1e-13) {
                    throw NumericError("instance: within-cluster block of F* not symmetric");
                }
            }
    }
}

DenseMatrix canonical_correction(const DenseMatrix& xtilde, const DenseMatrix& xtrue,
                                 const ClusterMap& clusters) {
    const std::size_t n = xtilde.rows();
    if (xtilde.cols() != n || xtrue.rows() != n || xtrue.cols() != n || clusters.n() != n) {
        throw DimensionError("canonical_correction: shapes do not conform");
    }
    const DenseMatrix b = lu_solve(xtilde, xtrue);

    DenseMatrix w(n, n);
    for (int k = 0; k < static_cast<int>(clusters.group_count()); ++k) {
        const auto idx = clusters.members(k);
        const std::size_t m = idx.size();
        DenseMatrix bk(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) bk(i, j) = b(idx[i], idx[j]);

        // polar factor of bk via the eigensolver on bk^T bk
        const JacobiResult eig = jacobi_eigen(SymMatrix(matmul(bk.transposed(), bk)));
        std::vector<double> inv_sigma(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double s2 = eig.lambda[i];
            const double sigma = s2 > 0.0 ? std::sqrt(s2) : 0.0;
            if (sigma < 1e-8) {
                throw NumericError(
                    "canonical_correction: cluster block polar factor ill-conditioned "
                    "(singular value < 1e-8)");
            }
            inv_sigma[i] = 1.0 / sigma;
        }
        // U = bk V Sigma^{-1} V^T, then the block of W is U^T
        const DenseMatrix u =
            matmul(matmul(bk, scale_columns(eig.q, inv_sigma)), eig.q.transposed());
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) w(idx[i], idx[j]) = u(j, i);
    }

    DenseMatrix f = matmul(b, w);
    for (std::size_t i = 0; i < n; ++i) f(i, i) -= 1.0;
    return f;
}

Instance gen_instance(const SpectrumSpec& spec, double perturbation) {
    spec.validate();
    if (!(perturbation >= 0.0) || perturbation >= kMaxPerturbation) {
        throw HypothesisError("gen_instance: perturbation must lie in [0, 1/3)");
    }
    const std::size_t n = spec.n();
    std::mt19937_64 rng(spec.seed);

    Instance inst;
    inst.spec_string = spec.to_string();
    inst.seed = spec.seed;
    inst.perturbation = perturbation;
    inst.eta = spec.eta();
    inst.clusters_true = spec.clusters();

    const std::vector<double> lambda = spec.expanded();
    inst.dstar = DiagMatrix(lambda);
    inst.norm_a = inst.dstar.max_abs();

    const DenseMatrix q = random_orthogonal(n, rng);
    inst.xtrue = q;
    inst.a = SymMatrix(matmul(scale_columns(q, lambda), q.transposed()));

    if (perturbation == 0.0) {
        inst.xtilde = inst.xtrue;
    } else {
        DenseMatrix p = gaussian_matrix(n, n, rng);
        const double sigma = spectral_norm(p);
        if (sigma == 0.0) throw NumericError("gen_instance: degenerate perturbation draw");
        p *= perturbation / sigma;
        inst.xtilde = matmul(inst.xtrue, inverse(DenseMatrix::identity(n) + p));
    }

    inst.fstar = canonical_correction(inst.xtilde, inst.xtrue, inst.clusters_true);
    inst.fstar_norm = spectral_norm(inst.fstar);
    inst.validate();
    return inst;
}

std::vector<double> order_estimates(const ConvergenceTrace& trace, std::size_t n,
                                    double norm_scale) {
    const double floor = 1e-14 * static_cast<double>(n) * std::max(norm_scale, 1.0);
    std::vector<double> orders;
    const auto& recs = trace.records;
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
        const double e0 = recs[k].e_norm, e1 = recs[k + 1].e_norm;
        if (e0 > 0.0 && e0 <= 1e-1 && e1 >= 10.0 * floor && e1 < e0) {
            orders.push_back(std::log(e1) / std::log(e0));
        }
    }
    return orders;
}

namespace {

void fill_descriptor(ExperimentResult& out, const Instance& inst) {
    out.spec = inst.spec_string;
    out.seed = inst.seed;
    out.perturbation = inst.perturbation;
    out.n = inst.n();
    out.eta = inst.eta;
    out.norm_a = inst.norm_a;
    out.fstar_norm = inst.fstar_norm;
}

/// z-space image of a refined eigenvector matrix.
StateVector refine_limit_state(const Instance& inst, const RefineResult& rr) {
    DenseMatrix f = lu_solve(inst.xtilde, rr.approx.x);
    for (std::size_t i = 0; i < f.rows(); ++i) f(i, i) -= 1.0;
    return {std::move(f), rr.approx.d};
}

void merge_worst(BoundReport& into, const BoundReport& other) {
    if (into.records.empty()) {
        into = other;
        return;
    }
    for (std::size_t k = 0; k < into.records.size() && k < other.records.size(); ++k) {
        if (other.records[k].lhs > into.records[k].lhs) into.records[k] = other.records[k];
    }
}

} // namespace

ExperimentResult run_convergence(const SpectrumSpec& spec, double perturbation,
                                 const RefineConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const Instance inst = gen_instance(spec, perturbation);

    ExperimentResult out;
    fill_descriptor(out, inst);
    out.config = cfg;

    const DenseMatrix ref = inst.canonical_limit();
    RefineResult rr = refine_loop(inst.a, inst.xtilde, cfg, &ref);
    out.order_estimates = order_estimates(rr.trace, inst.n(), inst.norm_a);

    if (rr.stop == StopReason::Converged || rr.stop == StopReason::Stagnated) {
        DenseMatrix f = lu_solve(inst.xtilde, rr.approx.x);
        for (std::size_t i = 0; i < f.rows(); ++i) f(i, i) -= 1.0;
        out.refine_vs_fstar = frobenius_norm(f - inst.fstar);
    }
    out.refine = std::move(rr);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

ExperimentResult run_fixedpoint_suite(const SpectrumSpec& spec, double perturbation,
                                      double delta, std::size_t samples) {
    const auto t0 = std::chrono::steady_clock::now();
    const Instance inst = gen_instance(spec, perturbation);
    if (!(delta < inst.eta / 3.0)) {
        throw HypothesisError("run_fixedpoint_suite: requires delta < eta/3");
    }

    ExperimentResult out;
    fill_descriptor(out, inst);
    out.delta = delta;

    const ResidualPair rs = residuals(inst.a, inst.xtilde, AccumMode::Compensated);
    const ProblemData pd = make_problem_data(rs, inst.clusters_true, inst.eta, inst.norm_a);
    const StateVector zstar{inst.fstar, inst.dstar};

    out.fixed_point_residual = distance(fmap(zstar, pd), zstar);

    try {
        RemainderBoundsOptions ropts;
        ropts.pd = &pd;
        ropts.fstar_norm = inst.fstar_norm;
        out.remainder_bounds = check_remainder_bounds(inst.fstar, inst.dstar, ropts);
    } catch (const HypothesisError& err) {
        out.hypothesis_notes.push_back(std::string("remainder_bounds skipped: ") + err.what());
    }

    std::mt19937_64 rng(inst.seed ^ 0x9e3779b97f4a7c15ULL);
    try {
        BoundReport worst;
        for (std::size_t i = 0; i < samples; ++i) {
            const StateVector z = sample_in_ball(zstar, delta, rng);
            merge_worst(worst,
                        check_map_derivative_bounds(pd, z, inst.fstar_norm, zstar, delta));
        }
        if (samples > 0) out.derivative_bounds = std::move(worst);
    } catch (const HypothesisError& err) {
        out.hypothesis_notes.push_back(std::string("derivative_bounds skipped: ") + err.what());
    }

    out.contraction = contraction_probe(pd, zstar, delta, std::max<std::size_t>(samples, 1),
                                        inst.seed + 1);

    // fixed-point iteration from 20 seeded starts in the ball
    std::vector<StateVector> limits;
    for (std::size_t i = 0; i < 20; ++i) {
        std::mt19937_64 start_rng(inst.seed + 1000 + i);
        const StateVector z0 = sample_in_ball(zstar, delta, start_rng);
        limits.push_back(picard_iterate(pd, z0, 80).z);
    }
    double pairwise = 0.0, vs_star = 0.0;
    for (std::size_t i = 0; i < limits.size(); ++i) {
        vs_star = std::max(vs_star, distance(limits[i], zstar));
        for (std::size_t j = i + 1; j < limits.size(); ++j) {
            pairwise = std::max(pairwise, distance(limits[i], limits[j]));
        }
    }
    out.picard_pairwise_max = pairwise;
    out.picard_vs_star_max = vs_star;

    RefineConfig cfg;
    cfg.step_kind = StepKind::Clustered;
    cfg.mode = AccumMode::Compensated;
    RefineResult rr = refine_loop(inst.a, inst.xtilde, cfg);
    if (rr.stop == StopReason::Converged || rr.stop == StopReason::Stagnated) {
        const StateVector z_refine = refine_limit_state(inst, rr);
        out.refine_vs_picard = distance(z_refine, limits.front());
        DenseMatrix f = z_refine.f;
        out.refine_vs_fstar = frobenius_norm(f - inst.fstar);
    } else {
        out.hypothesis_notes.push_back("refinement cross-check did not converge: " +
                                       to_string(rr.stop));
    }
    out.refine = std::move(rr);

    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

void write_trace_csv(const std::filesystem::path& path, const ConvergenceTrace& trace) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "iter,r_norm,s_off_norm,e_norm,err_vs_ref,seconds\n";
    for (const auto& rec : trace.records) {
        out << rec.iter << "," << io::format_double(rec.r_norm) << ","
            << io::format_double(rec.s_off_norm) << "," << io::format_double(rec.e_norm) << ",";
        if (rec.err_vs_ref) out << io::format_double(*rec.err_vs_ref);
        out << "," << io::format_double(rec.seconds) << "\n";
    }
}

nlohmann::json to_json(const BoundReport& report) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : report.records) {
        arr.push_back({{"name", r.name},
                       {"lhs", r.lhs},
                       {"rhs", r.rhs},
                       {"satisfied", r.satisfied},
                       {"slack", r.slack}});
    }
    return {{"records", arr}, {"all_satisfied", report.all_satisfied()}};
}

nlohmann::json to_json(const ContractionReport& report) {
    return {{"delta", report.delta},
            {"samples", report.samples},
            {"jacobian_frobenius_max", report.jacobian_frobenius_max},
            {"contraction_factor_estimate", report.contraction_factor_estimate},
            {"is_contraction", report.is_contraction}};
}

nlohmann::json to_json(const RefineConfig& cfg) {
    nlohmann::json j{{"max_iters", cfg.max_iters},
                     {"stop_tol", cfg.stop_tol},
                     {"accum", cfg.mode == AccumMode::Compensated ? "compensated" : "working"},
                     {"step", cfg.step_kind == StepKind::Clustered ? "clustered" : "basic"}};
    if (cfg.delta1) j["delta1"] = *cfg.delta1;
    return j;
}

namespace {
nlohmann::json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}
} // namespace

nlohmann::json to_json(const ExperimentResult& result) {
    nlohmann::json j;
    j["instance"] = {{"spec", result.spec},
                     {"seed", result.seed},
                     {"perturbation", result.perturbation},
                     {"n", result.n},
                     {"eta", finite_or_null(result.eta)},
                     {"norm_a", result.norm_a},
                     {"fstar_norm", result.fstar_norm}};
    if (result.config) j["config"] = to_json(*result.config);
    if (result.refine) {
        nlohmann::json trace = nlohmann::json::array();
        for (const auto& rec : result.refine->trace.records) {
            nlohmann::json row{{"iter", rec.iter},
                               {"r_norm", rec.r_norm},
                               {"s_off_norm", rec.s_off_norm},
                               {"e_norm", rec.e_norm},
                               {"seconds", rec.seconds}};
            if (rec.err_vs_ref) row["err_vs_ref"] = *rec.err_vs_ref;
            trace.push_back(row);
        }
        j["refine"] = {{"stop", to_string(result.refine->stop)},
                       {"stop_detail", result.refine->stop_detail},
                       {"iterations", result.refine->trace.records.size()},
                       {"trace", trace}};
    }
    if (!result.order_estimates.empty()) j["order_estimates"] = result.order_estimates;
    if (result.refine_vs_fstar) j["refine_vs_fstar"] = *result.refine_vs_fstar;
    if (result.delta) j["delta"] = *result.delta;
    if (result.remainder_bounds) j["remainder_bounds"] = to_json(*result.remainder_bounds);
    if (result.derivative_bounds) j["derivative_bounds"] = to_json(*result.derivative_bounds);
    if (result.contraction) j["contraction"] = to_json(*result.contraction);
    if (result.fixed_point_residual) j["fixed_point_residual"] = *result.fixed_point_residual;
    if (result.picard_pairwise_max) j["picard_pairwise_max"] = *result.picard_pairwise_max;
    if (result.picard_vs_star_max) j["picard_vs_star_max"] = *result.picard_vs_star_max;
    if (result.refine_vs_picard) j["refine_vs_picard"] = *result.refine_vs_picard;
    if (!result.hypothesis_notes.empty()) j["hypothesis_notes"] = result.hypothesis_notes;
    j["seconds"] = result.seconds;
    return j;
}

} // namespace eigrefine
