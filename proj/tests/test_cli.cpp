#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "eigrefine/matrix_io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = EIGREFINE_CLI_PATH;

int run(const std::string& args) {
    const int status = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "eigrefine_cli_test";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("gen writes the instance files") {
    const fs::path dir = work_dir() / "gen";
    fs::remove_all(dir);
    CHECK(run("gen --spec 1x3,2x3 --perturb 1e-3 --seed 7 --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "A.mtx"));
    CHECK(fs::exists(dir / "Xtilde.mtx"));
    CHECK(fs::exists(dir / "meta.json"));
    const auto a = eigrefine::io::read_sym_matrix(dir / "A.mtx");
    CHECK(a.n() == 6);
}

TEST_CASE("refine exits 0 on convergence and writes the trace") {
    const fs::path dir = work_dir() / "refine";
    fs::remove_all(dir);
    REQUIRE(run("gen --spec 1x3,2x3 --perturb 1e-4 --seed 3 --out " + dir.string()) == 0);
    const std::string base = "refine --a " + (dir / "A.mtx").string() + " --x " +
                             (dir / "Xtilde.mtx").string();
    CHECK(run(base + " --mode clustered --trace " + (dir / "t.csv").string()) == 0);
    CHECK(fs::exists(dir / "t.csv"));
    std::ifstream in(dir / "t.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "iter,r_norm,s_off_norm,e_norm,err_vs_ref,seconds");
}

TEST_CASE("refine exits 2 on breakdown") {
    const fs::path dir = work_dir() / "breakdown";
    fs::remove_all(dir);
    REQUIRE(run("gen --spec 1x3,2x3 --perturb 1e-4 --seed 3 --out " + dir.string()) == 0);
    CHECK(run("refine --a " + (dir / "A.mtx").string() + " --x " +
              (dir / "Xtilde.mtx").string() + " --mode basic") == 2);
}

TEST_CASE("refine option combinations") {
    const fs::path dir = work_dir() / "options";
    fs::remove_all(dir);
    REQUIRE(run("gen --spec 1x2,2x2 --perturb 1e-4 --seed 11 --out " + dir.string()) == 0);
    const std::string base = "refine --a " + (dir / "A.mtx").string() + " --x " +
                             (dir / "Xtilde.mtx").string();
    CHECK(run(base + " --mode clustered --accum compensated --delta1 1e-6 --tol 1e-13"
              " --max-iters 8 --out " + (dir / "Xr.mtx").string()) == 0);
    REQUIRE(fs::exists(dir / "Xr.mtx"));
    const auto x = eigrefine::io::read_matrix(dir / "Xr.mtx");
    CHECK(x.rows() == 4);
}

TEST_CASE("parse failures exit 3") {
    const fs::path dir = work_dir() / "parse";
    fs::create_directories(dir);
    std::ofstream(dir / "bad.mtx") << "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n";
    CHECK(run("refine --a " + (dir / "bad.mtx").string() + " --x " +
              (dir / "bad.mtx").string()) == 3);
    CHECK(run("gen --spec nonsense --out " + dir.string()) == 3);
}

TEST_CASE("hypothesis violations exit 4") {
    CHECK(run("analyze --spec 1x2,2x2 --perturb 1e-4 --delta 10 --samples 1") == 4);
    CHECK(run("gen --spec 1,2 --perturb 0.9 --out " + (work_dir() / "hyp").string()) == 4);
}

TEST_CASE("analyze writes a JSON report") {
    const fs::path report = work_dir() / "report.json";
    fs::remove(report);
    CHECK(run("analyze --spec 1x2,3x2 --perturb 1e-4 --seed 5 --delta 1e-5 --samples 5 "
              "--report " + report.string()) == 0);
    REQUIRE(fs::exists(report));
    std::ifstream in(report);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"is_contraction\": true") != std::string::npos);
}

TEST_CASE("the seed environment variable changes the default instance") {
    const fs::path dir_a = work_dir() / "env_a";
    const fs::path dir_b = work_dir() / "env_b";
    const fs::path dir_c = work_dir() / "env_c";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    fs::remove_all(dir_c);
    const std::string gen = std::string(" gen --spec 1,2,3 --perturb 1e-3 --out ");
    CHECK(WEXITSTATUS(std::system(
              ("EIGREFINE_SEED=5 " + kCli + gen + dir_a.string() + " >/dev/null").c_str())) == 0);
    CHECK(WEXITSTATUS(std::system(
              ("EIGREFINE_SEED=5 " + kCli + gen + dir_b.string() + " >/dev/null").c_str())) == 0);
    CHECK(WEXITSTATUS(std::system(
              ("EIGREFINE_SEED=6 " + kCli + gen + dir_c.string() + " >/dev/null").c_str())) == 0);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    CHECK(slurp(dir_a / "A.mtx") == slurp(dir_b / "A.mtx"));
    CHECK(slurp(dir_a / "A.mtx") != slurp(dir_c / "A.mtx"));
    // an explicit --seed wins over the environment
    const fs::path dir_d = work_dir() / "env_d";
    CHECK(WEXITSTATUS(std::system(("EIGREFINE_SEED=6 " + kCli +
                                   " gen --spec 1,2,3 --perturb 1e-3 --seed 5 --out " +
                                   dir_d.string() + " >/dev/null")
                                      .c_str())) == 0);
    CHECK(slurp(dir_a / "A.mtx") == slurp(dir_d / "A.mtx"));
}

TEST_CASE("bench runs at a small size") {
    CHECK(run("bench --n 24 --iters 2") == 0);
}
