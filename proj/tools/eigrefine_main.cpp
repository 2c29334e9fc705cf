#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "eigrefine/harness.hpp"
#include "eigrefine/matkit.hpp"
#include "eigrefine/matrix_io.hpp"
#include "eigrefine/refine.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBreakdown = 2;
constexpr int kExitParse = 3;
constexpr int kExitHypothesis = 4;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("EIGREFINE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw eigrefine::ParseError("EIGREFINE_SEED is not an unsigned integer", 0);
        }
    }
    return 1;
}

int run_gen(const std::string& spec_text, double perturb, std::uint64_t seed,
            const std::string& out_dir) {
    using namespace eigrefine;
    const SpectrumSpec spec = SpectrumSpec::parse(spec_text, seed);
    const Instance inst = gen_instance(spec, perturb);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    io::write_matrix(dir / "A.mtx", inst.a);
    io::write_matrix(dir / "Xtilde.mtx", inst.xtilde);

    nlohmann::json meta{
        {"spec", inst.spec_string},
        {"n", inst.n()},
        {"seed", inst.seed},
        {"perturbation", inst.perturbation},
        {"eta", std::isfinite(inst.eta) ? nlohmann::json(inst.eta) : nlohmann::json(nullptr)},
        {"norm_a", inst.norm_a},
        {"fstar_norm", inst.fstar_norm},
        {"fstar_over_perturbation",
         inst.perturbation > 0.0 ? nlohmann::json(inst.fstar_norm / inst.perturbation)
                                 : nlohmann::json(nullptr)},
        {"files", {{"a", "A.mtx"}, {"xtilde", "Xtilde.mtx"}}}};
    std::ofstream meta_out(dir / "meta.json");
    meta_out << meta.dump(2) << "\n";

    std::cout << meta.dump(2) << "\n";
    return kExitOk;
}

int run_refine(const std::string& a_path, const std::string& x_path, const std::string& mode,
               const std::string& accum, double delta1, bool delta1_set, double tol,
               std::size_t max_iters, const std::string& trace_path,
               const std::string& out_path) {
    using namespace eigrefine;
    const SymMatrix a = io::read_sym_matrix(a_path);
    const DenseMatrix x0 = io::read_matrix(x_path);

    RefineConfig cfg;
    cfg.step_kind = mode == "clustered" ? StepKind::Clustered : StepKind::Basic;
    cfg.mode = accum == "compensated" ? AccumMode::Compensated : AccumMode::Working;
    cfg.stop_tol = tol;
    cfg.max_iters = max_iters;
    if (delta1_set) cfg.delta1 = delta1;

    const RefineResult rr = refine_loop(a, x0, cfg);
    if (!trace_path.empty()) write_trace_csv(trace_path, rr.trace);
    if (!out_path.empty()) io::write_matrix(out_path, rr.approx.x);

    nlohmann::json summary{{"stop", to_string(rr.stop)},
                           {"iterations", rr.trace.records.size()},
                           {"config", to_json(cfg)}};
    const auto orders = order_estimates(rr.trace, a.n(), rr.approx.d.max_abs());
    if (!orders.empty()) summary["order_estimates"] = orders;
    if (!rr.stop_detail.empty()) summary["stop_detail"] = rr.stop_detail;
    if (!rr.trace.records.empty()) {
        const auto& last = rr.trace.records.back();
        summary["final"] = {{"r_norm", last.r_norm},
                            {"s_off_norm", last.s_off_norm},
                            {"e_norm", last.e_norm}};
    }
    std::cout << summary.dump(2) << "\n";
    return rr.stop == StopReason::Breakdown ? kExitBreakdown : kExitOk;
}

int run_analyze(const std::string& spec_text, double perturb, std::uint64_t seed, double delta,
                std::size_t samples, const std::string& report_path) {
    using namespace eigrefine;
    const SpectrumSpec spec = SpectrumSpec::parse(spec_text, seed);
    const ExperimentResult result = run_fixedpoint_suite(spec, perturb, delta, samples);
    const nlohmann::json j = to_json(result);
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        out << j.dump(2) << "\n";
    }
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int run_bench(std::size_t n, std::size_t iters, std::uint64_t seed) {
    using namespace eigrefine;
    if (n > 512) throw Error("bench: n must be <= 512");
    std::string spec_text;
    for (std::size_t i = 1; i <= n; ++i) {
        if (!spec_text.empty()) spec_text += ",";
        spec_text += std::to_string(i);
    }
    const SpectrumSpec spec = SpectrumSpec::parse(spec_text, seed);
    const Instance inst = gen_instance(spec, 1e-6);

    RefineConfig cfg;
    cfg.max_iters = 1;
    cfg.stop_tol = 1e-300;  // force the full iteration count
    DenseMatrix x = inst.xtilde;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < iters; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const RefineResult rr = refine_loop(inst.a, x, cfg);
        const double sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        x = rr.approx.x;
        const double flops = 4.0 * 2.0 * std::pow(static_cast<double>(n), 3);
        rows.push_back({{"iter", k},
                        {"seconds", sec},
                        {"gflops_est", flops / sec / 1e9},
                        {"e_norm", rr.trace.records.empty() ? 0.0
                                                            : rr.trace.records.back().e_norm}});
        std::cout << "iter " << k << ": " << sec << " s\n";
    }
    nlohmann::json j{{"n", n}, {"iters", iters}, {"rows", rows}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Iterative refinement of symmetric eigendecompositions with "
                 "fixed-point verification tools"};
    app.require_subcommand(1);

    std::string spec_text, out_dir = ".", a_path, x_path, mode = "basic", accum = "working";
    std::string trace_path, report_path, out_path;
    double perturb = 1e-4, delta1 = 0.0, tol = 1e-14, delta = 0.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t max_iters = 20, samples = 200, bench_n = 256, bench_iters = 5;

    auto* gen = app.add_subcommand("gen", "generate a test instance and write it out");
    gen->add_option("--spec", spec_text, "spectrum, e.g. \"1x3,2x3\"")->required();
    gen->add_option("--perturb", perturb, "2-norm of the candidate perturbation");
    gen->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
    gen->add_option("--out", out_dir, "output directory");

    auto* refine = app.add_subcommand("refine", "refine a candidate eigendecomposition");
    refine->add_option("--a", a_path, "symmetric matrix file")->required();
    refine->add_option("--x", x_path, "candidate eigenvector matrix file")->required();
    refine->add_option("--mode", mode)->check(CLI::IsMember({"basic", "clustered"}));
    refine->add_option("--accum", accum)->check(CLI::IsMember({"working", "compensated"}));
    auto* d1opt = refine->add_option("--delta1", delta1, "cluster threshold");
    refine->add_option("--tol", tol, "stop tolerance on ||E||_F");
    refine->add_option("--max-iters", max_iters);
    refine->add_option("--trace", trace_path, "per-iteration CSV output");
    refine->add_option("--out", out_path, "write the refined eigenvector matrix here");

    auto* analyze = app.add_subcommand("analyze", "run the fixed-point verification suite");
    analyze->add_option("--spec", spec_text)->required();
    analyze->add_option("--perturb", perturb);
    analyze->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
    analyze->add_option("--delta", delta, "ball radius")->required();
    analyze->add_option("--samples", samples);
    analyze->add_option("--report", report_path, "JSON report path");

    auto* bench = app.add_subcommand("bench", "time refinement iterations");
    bench->add_option("--n", bench_n);
    bench->add_option("--iters", bench_iters);
    bench->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (!seed_set) seed = default_seed();
        if (gen->parsed()) return run_gen(spec_text, perturb, seed, out_dir);
        if (refine->parsed()) {
            return run_refine(a_path, x_path, mode, accum, delta1, d1opt->count() > 0, tol,
                              max_iters, trace_path, out_path);
        }
        if (analyze->parsed()) {
            return run_analyze(spec_text, perturb, seed, delta, samples, report_path);
        }
        if (bench->parsed()) return run_bench(bench_n, bench_iters, seed);
    } catch (const eigrefine::ParseError& err) {
        std::cerr << "parse error: " << err.what() << "\n";
        return kExitParse;
    } catch (const eigrefine::HypothesisError& err) {
        std::cerr << "hypothesis violation: " << err.what() << "\n";
        return kExitHypothesis;
    } catch (const eigrefine::BreakdownNearMultiple& err) {
        std::cerr << "breakdown: " << err.what() << "\n";
        return kExitBreakdown;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
