// Acceptance suite: end-to-end checks of the refinement algorithm and the
// fixed-point verification machinery at desk scale. Each criterion prints one
// pass/fail line; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eigrefine/fixedpoint.hpp"
#include "eigrefine/harness.hpp"
#include "eigrefine/matkit.hpp"
#include "eigrefine/refine.hpp"

using namespace eigrefine;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Check {
public:
    explicit Check(std::ostringstream& out) : out_(out) {}

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok_ = false;
            out_ << (first_fail_ ? "" : "; ") << what;
            first_fail_ = false;
        }
    }
    bool ok() const { return ok_; }

private:
    std::ostringstream& out_;
    bool ok_ = true;
    bool first_fail_ = true;
};

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2e", v);
    return buf;
}

// --- criterion 1: quadratic convergence on a distinct spectrum ---------------
Outcome criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    const SpectrumSpec spec = SpectrumSpec::parse("1,2,3,4,5,6,7,8,9,10", 7);
    const Instance inst = gen_instance(spec, 1e-3);
    RefineConfig cfg;  // Basic, Working
    const RefineResult rr = refine_loop(inst.a, inst.xtilde, cfg);
    const double seconds = elapsed_since(t0);

    std::ostringstream out;
    Check c(out);
    c.require(rr.stop == StopReason::Converged, "did not converge: " + to_string(rr.stop));
    c.require(rr.trace.records.size() <= 4,
              "took " + std::to_string(rr.trace.records.size()) + " iterations");
    const auto& recs = rr.trace.records;
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
        if (recs[k + 1].e_norm <= 1e-13) continue;  // at the floor
        c.require(recs[k + 1].e_norm <= 10.0 * recs[k].e_norm * recs[k].e_norm,
                  "step " + std::to_string(k) + ": e=" + sci(recs[k].e_norm) + " -> " +
                      sci(recs[k + 1].e_norm) + " violates e' <= 10 e^2");
    }
    c.require(seconds < 1.0, "runtime " + sci(seconds) + " s >= 1 s");
    std::ostringstream detail;
    detail << recs.size() << " iterations, " << sci(seconds) << " s";
    return {c.ok(), c.ok() ? detail.str() : out.str()};
}

// --- criterion 2: breakdown vs repair on multiple eigenvalues ----------------
Outcome criterion2() {
    const SpectrumSpec spec = SpectrumSpec::parse("1x3,2x3", 7);
    const Instance inst = gen_instance(spec, 1e-4);

    std::ostringstream out;
    Check c(out);

    RefineConfig basic;
    basic.step_kind = StepKind::Basic;
    const RefineResult rb = refine_loop(inst.a, inst.xtilde, basic);
    c.require(rb.stop == StopReason::Breakdown,
              "basic step stopped with " + to_string(rb.stop) + " instead of breakdown");

    RefineConfig clustered;
    clustered.step_kind = StepKind::Clustered;  // default delta1
    const RefineResult rc = refine_loop(inst.a, inst.xtilde, clustered);
    c.require(rc.stop == StopReason::Converged,
              "clustered step stopped with " + to_string(rc.stop));
    c.require(rc.trace.records.size() <= 4,
              "clustered took " + std::to_string(rc.trace.records.size()) + " iterations");

    const ResidualPair rs = residuals(inst.a, rc.approx.x, AccumMode::Working);
    const double r_f = frobenius_norm(rs.r);
    const double s_off = offdiag_frobenius(rs.s);
    c.require(r_f <= 1e-13, "final ||R||_F = " + sci(r_f));
    c.require(s_off <= 1e-12 * inst.norm_a, "final ||offdiag S||_F = " + sci(s_off));
    std::ostringstream detail;
    detail << "basic: breakdown; clustered: " << rc.trace.records.size()
           << " iterations, ||R||_F = " << sci(r_f);
    return {c.ok(), c.ok() ? detail.str() : out.str()};
}

// --- criterion 3: remainder inequality suite ---------------------------------
Outcome criterion3() {
    const auto t0 = std::chrono::steady_clock::now();

    // instance pool for the residual-entry families
    std::vector<Instance> pool;
    std::vector<ProblemData> pool_pd;
    const char* pool_specs[] = {"1x2,2x2,3x2", "1,2,3,4,5,6", "1x3,3x3", "1x2,2x1,3x2,5x1",
                                "2x3,4x2"};
    for (std::size_t k = 0; k < 10; ++k) {
        SpectrumSpec spec = SpectrumSpec::parse(pool_specs[k % 5], 100 + k);
        pool.push_back(gen_instance(spec, 0.015));
        pool_pd.push_back(make_problem_data(
            residuals(pool.back().a, pool.back().xtilde, AccumMode::Compensated),
            pool.back().clusters_true, pool.back().eta, pool.back().norm_a));
    }

    std::mt19937_64 rng(777);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> norm_target(0.0, 0.1);
    std::uniform_real_distribution<double> diag_unif(-3.0, 3.0);

    std::ostringstream out;
    Check c(out);
    std::size_t violations = 0;
    for (std::size_t rep = 0; rep < 200; ++rep) {
        const std::size_t n = 6;
        double target = 0.0;
        while (target == 0.0) target = norm_target(rng);
        DenseMatrix f(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) f(i, j) = gauss(rng);
        f *= target / spectral_norm(f);
        std::vector<double> d(n);
        for (double& v : d) v = diag_unif(rng);

        RemainderBoundsOptions opts;
        opts.pd = &pool_pd[rep % pool_pd.size()];
        opts.fstar_norm = pool[rep % pool.size()].fstar_norm;
        const BoundReport rep_out = check_remainder_bounds(f, DiagMatrix(d), opts);
        for (const auto& record : rep_out.records) {
            if (!record.satisfied) {
                ++violations;
                c.require(false, "sample " + std::to_string(rep) + " violates " + record.name +
                                     " (lhs " + sci(record.lhs) + " rhs " + sci(record.rhs) + ")");
            }
        }
    }
    const double seconds = elapsed_since(t0);
    c.require(violations == 0, std::to_string(violations) + " violations");
    c.require(seconds < 30.0, "runtime " + sci(seconds) + " s >= 30 s");
    std::ostringstream detail;
    detail << "200 samples, 7 families, 0 violations, " << sci(seconds) << " s";
    return {c.ok(), c.ok() ? detail.str() : out.str()};
}

// shared instance for criteria 4 and 5
struct FixedPointSetup {
    Instance inst;
    ProblemData pd;
    StateVector zstar;
    double delta;
};

FixedPointSetup fixed_point_setup() {
    const SpectrumSpec spec = SpectrumSpec::parse("1x2,2x2,3x2", 3);
    Instance inst = gen_instance(spec, 1e-3);
    ProblemData pd = make_problem_data(residuals(inst.a, inst.xtilde, AccumMode::Compensated),
                                       inst.clusters_true, inst.eta, inst.norm_a);
    StateVector zstar{inst.fstar, inst.dstar};
    const double delta = 0.5 * std::min(inst.eta / 3.0, inst.fstar_norm);
    return {std::move(inst), std::move(pd), std::move(zstar), delta};
}

// --- criterion 4: map derivative bound suite ----------------------------------
Outcome criterion4() {
    const auto t0 = std::chrono::steady_clock::now();
    const FixedPointSetup s = fixed_point_setup();

    std::ostringstream out;
    Check c(out);
    c.require(s.inst.fstar_norm <= 0.01,
              "instance has ||F*||_2 = " + sci(s.inst.fstar_norm) + " > 0.01");

    std::mt19937_64 rng(2024);
    double worst_zero_family = 0.0;
    for (std::size_t rep = 0; rep < 50; ++rep) {
        const StateVector z = sample_in_ball(s.zstar, s.delta, rng);
        const BoundReport rep_out =
            check_map_derivative_bounds(s.pd, z, s.inst.fstar_norm, s.zstar, s.delta);
        for (const auto& record : rep_out.records) {
            if (!record.satisfied) {
                c.require(false, "sample " + std::to_string(rep) + " violates " + record.name +
                                     " (lhs " + sci(record.lhs) + " rhs " + sci(record.rhs) + ")");
            }
        }
        worst_zero_family =
            std::max(worst_zero_family, rep_out.find("df_hat_dd_within")->lhs);
    }
    c.require(worst_zero_family <= 1e-12,
              "within-cluster d-derivatives reach " + sci(worst_zero_family));
    const double seconds = elapsed_since(t0);
    c.require(seconds < 60.0, "runtime " + sci(seconds) + " s >= 60 s");
    std::ostringstream detail;
    detail << "50 states, 6 families, worst zero-family entry " << sci(worst_zero_family)
           << ", " << sci(seconds) << " s";
    return {c.ok(), c.ok() ? detail.str() : out.str()};
}

// --- criterion 5: contraction and uniqueness ----------------------------------
Outcome criterion5() {
    const FixedPointSetup s = fixed_point_setup();

    std::ostringstream out;
    Check c(out);
    const ContractionReport rep = contraction_probe(s.pd, s.zstar, s.delta, 50, 11);
    c.require(rep.is_contraction, "jacobian Frobenius max " + sci(rep.jacobian_frobenius_max));
    c.require(rep.jacobian_frobenius_max < 1.0,
              "jacobian Frobenius max " + sci(rep.jacobian_frobenius_max));

    std::vector<StateVector> limits;
    for (std::size_t i = 0; i < 20; ++i) {
        std::mt19937_64 rng(5000 + i);
        limits.push_back(picard_iterate(s.pd, sample_in_ball(s.zstar, s.delta, rng), 80).z);
    }
    double pairwise = 0.0, vs_star = 0.0;
    for (std::size_t i = 0; i < limits.size(); ++i) {
        vs_star = std::max(vs_star, distance(limits[i], s.zstar));
        for (std::size_t j = i + 1; j < limits.size(); ++j)
            pairwise = std::max(pairwise, distance(limits[i], limits[j]));
    }
    c.require(pairwise <= 1e-9, "picard limits spread " + sci(pairwise));
    c.require(vs_star <= 1e-9, "picard limit off the canonical state by " + sci(vs_star));
    std::ostringstream detail;
    detail << "jacobian max " << sci(rep.jacobian_frobenius_max) << ", limit spread "
           << sci(pairwise) << ", vs z* " << sci(vs_star);
    return {c.ok(), c.ok() ? detail.str() : out.str()};
}

// --- criterion 6: fixed-point residual on every generated instance -----------
Outcome criterion6() {
    std::ostringstream out;
    Check c(out);
    const char* specs[] = {"1x2,2x2,3x2", "1,2,3,4,5", "1x4,3x4", "1x3,2x3",
                           "1,2,3,4,5,6,7,8", "1x2,4x2,9x2"};
    double worst = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < 6; ++k) {
        for (double pert : {1e-5, 1e-4, 1e-3}) {
            const SpectrumSpec spec = SpectrumSpec::parse(specs[k], 50 + k);
            const Instance inst = gen_instance(spec, pert);
            const ProblemData pd =
                make_problem_data(residuals(inst.a, inst.xtilde, AccumMode::Compensated),
                                  inst.clusters_true, inst.eta, inst.norm_a);
            const StateVector zstar{inst.fstar, inst.dstar};
            const double resid = distance(fmap(zstar, pd), zstar);
            const double bound = 1e-10 * (1.0 + zstar.norm());
            worst = std::max(worst, resid / bound);
            ++count;
            c.require(resid <= bound, std::string(specs[k]) + " pert " + sci(pert) +
                                          ": residual " + sci(resid) + " > " + sci(bound));
        }
    }
    std::ostringstream detail;
    detail << count << " instances, worst residual at " << sci(worst) << " of the bound";
    return {c.ok(), c.ok() ? detail.str() : out.str()};
}

// --- criterion 7: refinement lands on the canonical correction ---------------
Outcome criterion7() {
    std::ostringstream out;
    Check c(out);
    const char* specs[] = {"1x2,2x2", "1x3,2x3", "1,2,3,4,5,6", "1x2,2x1,4x3"};
    double worst = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        for (double pert : {1e-4, 1e-3}) {
            const SpectrumSpec spec = SpectrumSpec::parse(specs[k], 80 + k);
            const Instance inst = gen_instance(spec, pert);
            RefineConfig cfg;
            cfg.step_kind = StepKind::Clustered;
            const RefineResult rr = refine_loop(inst.a, inst.xtilde, cfg);
            if (rr.stop != StopReason::Converged && rr.stop != StopReason::Stagnated) {
                c.require(false, std::string(specs[k]) + ": " + to_string(rr.stop));
                continue;
            }
            DenseMatrix f = lu_solve(inst.xtilde, rr.approx.x);
            for (std::size_t i = 0; i < f.rows(); ++i) f(i, i) -= 1.0;
            const double dist = frobenius_norm(f - inst.fstar);
            worst = std::max(worst, dist);
            c.require(dist <= 1e-8, std::string(specs[k]) + " pert " + sci(pert) +
                                        ": distance " + sci(dist));
        }
    }
    std::ostringstream detail;
    detail << "8 instances, worst distance " << sci(worst);
    return {c.ok(), c.ok() ? detail.str() : out.str()};
}

// --- criterion 8: compensated-precision benefit -------------------------------
Outcome criterion8() {
    SpectrumSpec spec;
    spec.seed = 2;
    for (int k = 0; k < 10; ++k) spec.values.emplace_back(std::pow(10.0, 2.0 * k / 3.0), 1);
    const Instance inst = gen_instance(spec, 1e-7);

    RefineConfig cfg;
    cfg.max_iters = 12;
    cfg.mode = AccumMode::Working;
    const RefineResult rw = refine_loop(inst.a, inst.xtilde, cfg);
    cfg.mode = AccumMode::Compensated;
    const RefineResult rc = refine_loop(inst.a, inst.xtilde, cfg);

    std::ostringstream out;
    Check c(out);
    const double r_w = rw.trace.records.back().r_norm;
    const double r_c = rc.trace.records.back().r_norm;
    c.require(r_c < r_w, "compensated ||R||_F " + sci(r_c) + " not below working " + sci(r_w));
    c.require(r_c * 10.0 <= r_w, "ratio " + sci(r_w / r_c) + " below 10x (working " + sci(r_w) +
                                     ", compensated " + sci(r_c) + ")");
    std::ostringstream detail;
    detail << "working " << sci(r_w) << ", compensated " << sci(r_c) << ", ratio "
           << sci(r_w / r_c);
    return {c.ok(), c.ok() ? detail.str() : out.str()};
}

// --- criterion 9: oracle equivalence ------------------------------------------
Outcome criterion9() {
    std::ostringstream out;
    Check c(out);
    std::mt19937_64 rng(31337);
    std::uniform_int_distribution<int> group_count(1, 3);
    std::uniform_int_distribution<int> mult(1, 3);
    std::uniform_real_distribution<double> gap(0.5, 2.0);

    double worst_eig = 0.0, worst_angle = 0.0;
    std::size_t built = 0;
    std::uint64_t seed = 0;
    while (built < 50) {
        ++seed;
        SpectrumSpec spec;
        spec.seed = 31000 + seed;
        double value = 1.0;
        const int groups = group_count(rng);
        for (int g = 0; g < groups; ++g) {
            spec.values.emplace_back(value, static_cast<std::size_t>(mult(rng)));
            value += gap(rng);
        }
        if (spec.n() > 8) continue;
        ++built;

        const Instance inst = gen_instance(spec, 1e-4);
        RefineConfig cfg;
        cfg.step_kind = StepKind::Clustered;
        cfg.mode = AccumMode::Compensated;
        const RefineResult rr = refine_loop(inst.a, inst.xtilde, cfg);
        const bool settled =
            rr.stop == StopReason::Converged || rr.stop == StopReason::Stagnated;
        c.require(settled, "instance " + std::to_string(built) + ": " + to_string(rr.stop));
        if (!settled) continue;

        const JacobiResult oracle = jacobi_eigen(inst.a);

        // eigenvalues, sorted
        std::vector<double> refined = rr.approx.d.values();
        std::sort(refined.begin(), refined.end());
        for (std::size_t i = 0; i < refined.size(); ++i) {
            const double err = std::fabs(refined[i] - oracle.lambda[i]);
            worst_eig = std::max(worst_eig, err / inst.norm_a);
            c.require(err <= 1e-11 * inst.norm_a,
                      "instance " + std::to_string(built) + ": eigenvalue " +
                          std::to_string(i) + " off by " + sci(err));
        }

        // per-cluster subspaces via projector differences
        const std::size_t n = inst.n();
        std::size_t offset = 0;
        for (std::size_t g = 0; g < inst.clusters_true.group_count(); ++g) {
            const std::size_t m = inst.clusters_true.sizes[g];
            DenseMatrix xc(n, m), qc(n, m);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    xc(i, j) = rr.approx.x(i, offset + j);
                    qc(i, j) = oracle.q(i, offset + j);
                }
            const DenseMatrix diff =
                matmul(xc, xc.transposed()) - matmul(qc, qc.transposed());
            const double angle = spectral_norm(diff);  // sin of the largest principal angle
            worst_angle = std::max(worst_angle, angle);
            c.require(angle <= 1e-8, "instance " + std::to_string(built) + ": cluster " +
                                         std::to_string(g) + " angle " + sci(angle));
            offset += m;
        }
    }
    std::ostringstream detail;
    detail << "50 instances, worst eigenvalue error " << sci(worst_eig)
           << " of ||A||_2, worst subspace angle " << sci(worst_angle);
    return {c.ok(), c.ok() ? detail.str() : out.str()};
}

} // namespace

int main() {
    struct Entry {
        int number;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> criteria = {
        {1, "quadratic convergence on a distinct spectrum", criterion1},
        {2, "multiple-eigenvalue breakdown vs clustered repair", criterion2},
        {3, "remainder inequality suite", criterion3},
        {4, "map derivative bound suite", criterion4},
        {5, "contraction and fixed-point uniqueness", criterion5},
        {6, "fixed-point residual of the canonical state", criterion6},
        {7, "refinement lands on the canonical correction", criterion7},
        {8, "compensated-precision benefit", criterion8},
        {9, "oracle equivalence of refined decompositions", criterion9},
    };

    int failures = 0;
    for (const auto& entry : criteria) {
        Outcome outcome;
        try {
            outcome = entry.run();
        } catch (const std::exception& err) {
            outcome = {false, std::string("exception: ") + err.what()};
        }
        std::printf("[%s] criterion %d: %s — %s\n", outcome.pass ? "PASS" : "FAIL",
                    entry.number, entry.name, outcome.detail.c_str());
        std::fflush(stdout);
        if (!outcome.pass) ++failures;
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
