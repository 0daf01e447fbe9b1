#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bernstein/heat_kernel.hpp"
#include "bernstein/level_process.hpp"
#include "bernstein/spectral_basis.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("BERNSTEIN_CLI");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& args) {
    int status = std::system((cli_path() + " " + args).c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "bernstein_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Two-level toy basis with eigenvalues {0, 1}: f_0 = 1 and the linear
/// ramp sqrt(2)(1 - 2x), which the importer renormalizes on load.
void write_toy_basis(const fs::path& file) {
    std::ofstream os(file);
    os << "basis interval 2 3\n0\n0.5\n1\n";
    os << "lambda 0\n1\n1\n1\n";
    os << "lambda 1\n1.4142135623730951\n0\n-1.4142135623730951\n";
}

}  // namespace

TEST_CASE("spectrum writes the eigenvalue table", "[cli]") {
    auto dir = scratch("spectrum");
    REQUIRE(run("spectrum --domain interval --levels 4 --out " + dir.string() +
                " > /dev/null") == 0);
    auto csv = slurp(dir / "spectrum.csv");
    CHECK(csv.rfind("level,lambda,normalizer\n", 0) == 0);
    // lambda_1 = pi^2 / 2
    CHECK(csv.find("1,4.9348022005446") != std::string::npos);
    auto man = slurp(dir / "manifest.txt");
    CHECK(man.find("command=spectrum") != std::string::npos);
    CHECK(man.find("domain=interval") != std::string::npos);
    CHECK(man.find("levels=4") != std::string::npos);
    CHECK(man.find("config_hash=") != std::string::npos);
}

TEST_CASE("bad inputs exit with the configuration code", "[cli]") {
    auto dir = scratch("badinput");
    CHECK(run("spectrum --quad-order 0 --out " + dir.string() + " 2> /dev/null") == 2);
    CHECK(run("spectrum --basis-file " + (dir / "missing.txt").string() + " --out " +
              dir.string() + " 2> /dev/null") == 2);
    CHECK(run("frobnicate 2> /dev/null") == 2);
}

TEST_CASE("entropy solves the toy two-level problem", "[cli]") {
    auto dir = scratch("entropy");
    auto toy = dir / "toy_basis.txt";
    write_toy_basis(toy);
    REQUIRE(run("entropy --basis-file " + toy.string() +
                " --lambda 0.25 --tol 1e-12 --out " + dir.string() + " > /dev/null") == 0);
    auto gibbs = slurp(dir / "gibbs.txt");
    // beta = ln 3 and the corresponding entropy of {3/4, 1/4}
    CHECK(gibbs.find("beta=1.0986122886681") != std::string::npos);
    CHECK(gibbs.find("S_max=5.623351446188") != std::string::npos);
    auto weights = slurp(dir / "weights.csv");
    REQUIRE(weights.rfind("level,p\n", 0) == 0);
    // parse the two weight rows and compare numerically
    std::istringstream rows(weights.substr(weights.find('\n') + 1));
    std::string row;
    double parsed[2] = {0.0, 0.0};
    for (int m = 0; m < 2; ++m) {
        REQUIRE(std::getline(rows, row));
        parsed[m] = std::stod(row.substr(row.find(',') + 1));
    }
    CHECK_THAT(parsed[0], Catch::Matchers::WithinAbs(0.75, 1e-9));
    CHECK_THAT(parsed[1], Catch::Matchers::WithinAbs(0.25, 1e-9));
}

TEST_CASE("infeasible entropy targets exit 3 with a bracket", "[cli]") {
    auto dir = scratch("entropy_bad");
    auto toy = dir / "toy_basis.txt";
    write_toy_basis(toy);
    auto err = dir / "stderr.txt";
    CHECK(run("entropy --basis-file " + toy.string() + " --lambda -1 --out " + dir.string() +
              " 2> " + err.string()) == 3);
    auto msg = slurp(err);
    CHECK(msg.find("feasible bracket") != std::string::npos);
}

TEST_CASE("verify passes on a clean basis and fails the negative control", "[cli]") {
    auto dir = scratch("verify");
    REQUIRE(run("verify --domain interval --levels 6 --truncation 6 --out " + dir.string() +
                " > /dev/null") == 0);
    auto table = slurp(dir / "verify.txt");
    CHECK(table.rfind("check,residual,tolerance,status\n", 0) == 0);
    CHECK(table.find("orthonormality,") != std::string::npos);
    CHECK(table.find("lemma1_normalization,") != std::string::npos);
    CHECK(table.find(",fail") == std::string::npos);

    auto dir2 = scratch("verify_perturbed");
    CHECK(run("verify --domain interval --levels 6 --truncation 6 --perturb 0.01 --out " +
              dir2.string() + " > /dev/null") == 5);
    auto bad = slurp(dir2 / "verify.txt");
    CHECK(bad.find(",fail") != std::string::npos);
    CHECK(bad.find("lemma1_normalization") != std::string::npos);
}

TEST_CASE("simulate is deterministic and reports fits", "[cli]") {
    auto dir1 = scratch("sim1");
    auto dir2 = scratch("sim2");
    std::string args =
        "simulate --domain interval --levels 6 --truncation 6 --process level --level 1 "
        "--times 0.0 0.5 1.0 --paths 3000 --seed 11 --bins 8 --out ";
    REQUIRE(run(args + dir1.string() + " > /dev/null") == 0);
    REQUIRE(run(args + dir2.string() + " > /dev/null") == 0);
    CHECK(slurp(dir1 / "trajectories.csv") == slurp(dir2 / "trajectories.csv"));
    CHECK(slurp(dir1 / "report.txt") == slurp(dir2 / "report.txt"));
    auto report = slurp(dir1 / "report.txt");
    CHECK(report.find("status=pass") != std::string::npos);
    CHECK(report.find("status=fail") == std::string::npos);
    auto man = slurp(dir1 / "manifest.txt");
    CHECK(man.find("seed=11") != std::string::npos);
    CHECK(man.find("paths=3000") != std::string::npos);
}

TEST_CASE("simulate runs mixtures from a weights file", "[cli]") {
    auto dir = scratch("sim_mix");
    {
        std::ofstream os(dir / "weights.csv");
        os << "level,p\n0,0.6\n1,0.4\n";
    }
    REQUIRE(run("simulate --domain interval --levels 6 --truncation 6 --process mixture "
                "--weights " +
                (dir / "weights.csv").string() +
                " --times 0.0 0.5 --paths 3000 --seed 5 --bins 8 --out " + dir.string() +
                " > /dev/null") == 0);
    CHECK(slurp(dir / "manifest.txt").find("process=mixture") != std::string::npos);
    // mixture sampling without a weights file is a configuration error
    CHECK(run("simulate --domain interval --process mixture --out " + dir.string() +
              " 2> /dev/null") == 2);
}

TEST_CASE("bridge recovers marginals and reports non-convergence", "[cli]") {
    using namespace bernstein;
    auto dir = scratch("bridge");
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    const double T = 1.0;
    double scale = 1.0 + 0.12 * std::exp(-T * basis.eigenvalue(1));
    std::vector<double> phi = {1.0, 0.4};
    std::vector<double> psi = {1.0 / scale, 0.3 / scale};
    auto proc = make_level_process(kernel, 1, BoundarySpec(phi), BoundarySpec(psi), T);
    auto write_density = [&](const fs::path& p, const std::vector<double>& rho) {
        std::ofstream os(p);
        os << "node_index,value\n";
        os.precision(17);
        for (std::size_t i = 0; i < rho.size(); ++i) os << i << ',' << rho[i] << '\n';
    };
    write_density(dir / "mu0.csv", proc.marginal_grid(0.0));
    write_density(dir / "muT.csv", proc.marginal_grid(T));

    std::string files =
        " --mu0 " + (dir / "mu0.csv").string() + " --muT " + (dir / "muT.csv").string();
    REQUIRE(run("bridge --domain interval --levels 6 --truncation 6 --horizon 1.0" + files +
                " --tol 1e-10 --out " + dir.string() + " > /dev/null") == 0);
    auto res = slurp(dir / "residuals.txt");
    CHECK(res.find("converged=true") != std::string::npos);
    CHECK(slurp(dir / "phi.csv").rfind("node_index,value\n", 0) == 0);

    CHECK(run("bridge --domain interval --levels 6 --truncation 6 --horizon 1.0" + files +
              " --tol 1e-15 --max-iter 1 --out " + dir.string() + " 2> /dev/null") == 4);

    // a nonpositive marginal is refused as a configuration error
    auto zeroed = proc.marginal_grid(0.0);
    zeroed[10] = 0.0;
    write_density(dir / "mu_bad.csv", zeroed);
    CHECK(run("bridge --domain interval --levels 6 --truncation 6 --horizon 1.0 --mu0 " +
              (dir / "mu_bad.csv").string() + " --muT " + (dir / "muT.csv").string() +
              " --out " + dir.string() + " 2> /dev/null") == 2);
}

TEST_CASE("config files feed options and flags take precedence", "[cli]") {
    auto dir = scratch("config");
    {
        std::ofstream os(dir / "run.cfg");
        os << "[spectrum]\ndomain=disk\nlevels=5\n";
    }
    REQUIRE(run("--config " + (dir / "run.cfg").string() + " spectrum --out " + dir.string() +
                " > /dev/null") == 0);
    auto man = slurp(dir / "manifest.txt");
    CHECK(man.find("domain=disk") != std::string::npos);
    CHECK(man.find("levels=5") != std::string::npos);

    auto dir2 = scratch("config_override");
    REQUIRE(run("--config " + (dir / "run.cfg").string() + " spectrum --levels 6 --out " +
                dir2.string() + " > /dev/null") == 0);
    CHECK(slurp(dir2 / "manifest.txt").find("levels=6") != std::string::npos);
    auto csv = slurp(dir2 / "spectrum.csv");
    CHECK(csv.find("\n5,") != std::string::npos);
}
