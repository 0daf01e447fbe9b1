// Command-line surface for the spectral Bernstein-process library.
//
// Subcommands: spectrum, simulate, entropy, verify, bridge. A key=value
// config file (keys grouped in a [subcommand] section) can be supplied with
// --config before the subcommand; command-line flags take precedence. Every
// run writes a manifest echoing the resolved configuration.
// Exit codes: 0 success, 2 config/input error, 3 infeasible problem,
// 4 non-convergence, 5 failed invariant or fit check.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bernstein/heat_kernel.hpp"
#include "bernstein/level_process.hpp"
#include "bernstein/mixture.hpp"
#include "bernstein/sampler.hpp"
#include "bernstein/spectral_basis.hpp"
#include "bernstein/stat_operator.hpp"
#include "bernstein/stats.hpp"

namespace {

using namespace bernstein;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNoConvergence = 4;
constexpr int kExitCheckFailed = 5;

std::string fmt(double v) { return detail::format_real(v); }

/// Write-then-rename so partially written outputs never appear under the
/// final name.
void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open output file " + tmp.string());
        os << content;
    }
    std::filesystem::rename(tmp, path);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Resolved configuration echoed into the manifest, insertion-ordered.
struct Manifest {
    std::vector<std::pair<std::string, std::string>> entries;

    void add(const std::string& key, const std::string& value) { entries.push_back({key, value}); }
    void add(const std::string& key, double value) { add(key, fmt(value)); }
    void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }

    void write(const std::filesystem::path& dir) const {
        std::ostringstream body;
        for (const auto& [k, v] : entries) body << k << "=" << v << "\n";
        std::ostringstream out;
        out << body.str() << "config_hash=" << fnv1a(body.str()) << "\n";
        atomic_write(dir / "manifest.txt", out.str());
    }
};

struct BasisOptions {
    std::string domain = "interval";
    std::size_t levels = 8;
    std::size_t quad_order = 64;
    std::string basis_file;
};

void add_basis_options(CLI::App* cmd, BasisOptions& opt) {
    cmd->add_option("--domain", opt.domain, "Built-in domain: interval or disk")
        ->check(CLI::IsMember({"interval", "disk"}));
    cmd->add_option("--levels", opt.levels, "Number of spectral levels")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--quad-order", opt.quad_order, "Gauss quadrature order")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--basis-file", opt.basis_file,
                    "Import the basis from a tabulated file instead of a built-in domain");
}

SpectralBasis build_basis(const BasisOptions& opt) {
    if (!opt.basis_file.empty()) return import_basis_file(opt.basis_file, opt.quad_order);
    if (opt.domain == "disk") return disk_basis(opt.levels, opt.quad_order);
    return interval_basis(opt.levels, opt.quad_order);
}

void describe_basis(Manifest& m, const BasisOptions& opt, const SpectralBasis& basis) {
    m.add("domain", opt.basis_file.empty() ? opt.domain : std::string("imported"));
    if (!opt.basis_file.empty()) m.add("basis_file", opt.basis_file);
    m.add("levels", basis.level_count());
    m.add("quad_order", basis.quadrature().size());
}

/// Default positive boundary pair for level m: phi = (1 + 0.9 f_m / sup|f_m|)
/// scaled to the uniform density, psi = 1.
LevelProcess default_level_process(const HeatKernel& kernel, std::size_t m, double T) {
    const SpectralBasis& basis = kernel.basis();
    if (m >= kernel.truncation())
        throw std::invalid_argument("level must lie below the kernel truncation");
    double tw = basis.quadrature().total_weight();
    double volume = basis.area_factor() * tw;
    std::vector<double> phi(kernel.truncation(), 0.0), psi(kernel.truncation(), 0.0);
    phi[0] = std::sqrt(tw) / volume;
    if (m > 0) phi[m] = 0.9 / (basis.sup_norm(m) * volume);
    psi[0] = std::sqrt(tw);
    return make_level_process(kernel, m, BoundarySpec(phi), BoundarySpec(psi), T);
}

WeightSequence load_weights_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open weights file " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("level,p", 0) != 0)
        throw std::runtime_error("weights file must start with header 'level,p'");
    std::vector<double> weights;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("malformed weights row: " + line);
        std::size_t level = std::stoul(line.substr(0, comma));
        double p = std::stod(line.substr(comma + 1));
        if (level >= weights.size()) weights.resize(level + 1, 0.0);
        weights[level] = p;
    }
    return make_weight_sequence(std::move(weights));
}

std::vector<double> load_density_csv(const std::string& path, std::size_t expected) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open density file " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("node_index,value", 0) != 0)
        throw std::runtime_error("density file must start with header 'node_index,value'");
    std::vector<double> values(expected, 0.0);
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("malformed density row: " + line);
        std::size_t idx = std::stoul(line.substr(0, comma));
        if (idx >= expected)
            throw std::runtime_error("density node index out of range in " + path);
        values[idx] = std::stod(line.substr(comma + 1));
        ++rows;
    }
    if (rows != expected)
        throw std::runtime_error("density file " + path + " has " + std::to_string(rows) +
                                 " rows, expected " + std::to_string(expected));
    return values;
}

std::string grid_vector_csv(const std::vector<double>& v) {
    std::ostringstream os;
    os << "node_index,value\n";
    for (std::size_t i = 0; i < v.size(); ++i) os << i << ',' << fmt(v[i]) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const BasisOptions& bopt, const std::string& out_dir) {
    SpectralBasis basis = build_basis(bopt);
    std::filesystem::create_directories(out_dir);
    std::ostringstream csv;
    csv << "level,lambda,normalizer\n";
    for (std::size_t m = 0; m < basis.level_count(); ++m)
        csv << m << ',' << fmt(basis.eigenvalue(m)) << ',' << fmt(basis.level(m).normalizer)
            << '\n';
    atomic_write(std::filesystem::path(out_dir) / "spectrum.csv", csv.str());
    Manifest man;
    man.add("command", std::string("spectrum"));
    describe_basis(man, bopt, basis);
    man.write(out_dir);
    std::cout << "wrote " << out_dir << "/spectrum.csv (" << basis.level_count() << " levels)\n";
    return kExitOk;
}

struct SimulateOptions {
    BasisOptions basis;
    double horizon = 1.0;
    std::size_t truncation = 6;
    double t_min = 0.05;
    std::string process = "level";
    std::size_t level = 0;
    std::vector<double> times;
    std::size_t paths = 10000;
    std::uint64_t seed = 1;
    std::size_t bins = 10;
    double alpha = 0.01;
    std::string weights_file;
    std::string out_dir = ".";
};

int cmd_simulate(const SimulateOptions& opt) {
    SpectralBasis basis = build_basis(opt.basis);
    std::size_t trunc = std::min(opt.truncation, basis.level_count());
    HeatKernel kernel(basis, trunc, opt.t_min);
    std::vector<double> times = opt.times;
    if (times.empty()) times = {0.0, 0.5 * opt.horizon, opt.horizon};

    TrajectoryBatch batch;
    std::function<double(double, double)> density;  // (x, t) -> marginal density
    WeightSequence weights;
    std::vector<LevelProcess> procs;
    if (opt.process == "level") {
        procs.push_back(default_level_process(kernel, opt.level, opt.horizon));
        batch = sample_level_paths(procs[0], times, opt.paths, opt.seed);
        density = [&procs](double x, double t) { return procs[0].u(x, t) * procs[0].v(x, t); };
    } else if (opt.process == "mixture") {
        if (opt.weights_file.empty())
            throw std::invalid_argument("--weights is required for process=mixture");
        weights = load_weights_csv(opt.weights_file);
        for (std::size_t m = 0; m < weights.weights.size(); ++m)
            procs.push_back(default_level_process(kernel, m, opt.horizon));
        batch = sample_mixture_paths(procs, weights, times, opt.paths, opt.seed);
        density = [&procs, &weights](double x, double t) {
            double s = 0.0;
            for (std::size_t m = 0; m < procs.size(); ++m)
                s += weights.weights[m] * procs[m].u(x, t) * procs[m].v(x, t);
            return s;
        };
    } else {  // stationary
        batch = sample_stationary_pinned(kernel, opt.horizon, times, opt.paths, opt.seed);
        double z = kernel.partition_function(opt.horizon);
        density = [&kernel, z, T = opt.horizon](double x, double) {
            return kernel.eval(x, T, x) / z;
        };
    }

    std::filesystem::create_directories(opt.out_dir);
    {
        std::ostringstream os;
        write_trajectory_csv(os, batch);
        atomic_write(std::filesystem::path(opt.out_dir) / "trajectories.csv", os.str());
    }

    bool all_pass = true;
    std::ostringstream report;
    for (double t : times) {
        auto fit = goodness_of_fit(
            basis, batch, [&](double x) { return density(x, t); }, t, opt.bins);
        bool pass = fit.p_value > opt.alpha;
        all_pass = all_pass && pass;
        report << "time=" << fmt(t) << " statistic=" << fmt(fit.statistic)
               << " dof=" << fit.dof << " bins_used=" << fit.bins_used
               << " p_value=" << fmt(fit.p_value) << " status=" << (pass ? "pass" : "fail")
               << "\n";
    }
    atomic_write(std::filesystem::path(opt.out_dir) / "report.txt", report.str());
    std::cout << report.str();

    Manifest man;
    man.add("command", std::string("simulate"));
    describe_basis(man, opt.basis, basis);
    man.add("horizon", opt.horizon);
    man.add("truncation", trunc);
    man.add("t_min", opt.t_min);
    man.add("process", opt.process);
    if (opt.process == "level") man.add("level", opt.level);
    if (!opt.weights_file.empty()) man.add("weights_file", opt.weights_file);
    for (std::size_t k = 0; k < times.size(); ++k) man.add("time_" + std::to_string(k), times[k]);
    man.add("paths", opt.paths);
    man.add("seed", opt.seed);
    man.add("bins", opt.bins);
    man.add("alpha", opt.alpha);
    man.write(opt.out_dir);

    if (!all_pass) {
        std::cerr << "simulate: at least one goodness-of-fit test failed\n";
        return kExitCheckFailed;
    }
    return kExitOk;
}

struct EntropyOptions {
    BasisOptions basis;
    double lambda_target = 1.0;
    double tol = 1e-10;
    std::string out_dir = ".";
};

int cmd_entropy(const EntropyOptions& opt) {
    SpectralBasis basis = build_basis(opt.basis);
    std::vector<double> lambda(basis.level_count());
    for (std::size_t m = 0; m < basis.level_count(); ++m) lambda[m] = basis.eigenvalue(m);

    GibbsParameters params;
    try {
        params = solve_beta(lambda, opt.lambda_target, opt.tol);
    } catch (const InfeasibleError& e) {
        double lam0 = lambda.front();
        double top = detail::mean_energy_raw(lambda, 1e-9 / (lambda.back() - lambda.front() + 1.0));
        std::cerr << e.what() << "\nfeasible bracket: (" << fmt(lam0) << ", " << fmt(top) << ")\n";
        return kExitInfeasible;
    }
    double s_max = max_entropy(params, lambda);
    double residual = std::abs(detail::mean_energy_raw(lambda, params.beta) - opt.lambda_target);
    auto weights = make_weight_sequence(detail::gibbs_weights_raw(lambda, params.beta));

    std::filesystem::create_directories(opt.out_dir);
    std::ostringstream block;
    block << "beta=" << fmt(params.beta) << "\nZ=" << fmt(params.Z)
          << "\nlambda=" << fmt(params.lambda_target) << "\nS_max=" << fmt(s_max)
          << "\nresidual=" << fmt(residual) << "\n";
    atomic_write(std::filesystem::path(opt.out_dir) / "gibbs.txt", block.str());
    std::ostringstream csv;
    csv << "level,p\n";
    for (std::size_t m = 0; m < weights.weights.size(); ++m)
        csv << m << ',' << fmt(weights.weights[m]) << '\n';
    atomic_write(std::filesystem::path(opt.out_dir) / "weights.csv", csv.str());
    std::cout << block.str();

    Manifest man;
    man.add("command", std::string("entropy"));
    describe_basis(man, opt.basis, basis);
    man.add("lambda_target", opt.lambda_target);
    man.add("tol", opt.tol);
    man.write(opt.out_dir);
    return kExitOk;
}

struct VerifyOptions {
    BasisOptions basis;
    double horizon = 1.0;
    std::size_t truncation = 6;
    double t_min = 0.05;
    double perturb = 0.0;
    std::string out_dir = ".";
};

/// Copy of a basis with `eps` of level 1 mixed into level 2; a deliberately
/// broken fixture for the negative-control checks.
SpectralBasis perturbed_basis(const SpectralBasis& src, double eps) {
    if (src.level_count() < 3) throw std::invalid_argument("--perturb needs at least 3 levels");
    std::vector<EigenLevel> levels;
    for (std::size_t m = 0; m < src.level_count(); ++m) {
        EigenLevel lvl = src.level(m);
        if (m == 2) {
            auto f1 = src.level(1).eigenfunction;
            auto f2 = src.level(2).eigenfunction;
            lvl.eigenfunction = [f1, f2, eps](double x) { return f2(x) + eps * f1(x); };
        }
        levels.push_back(std::move(lvl));
    }
    auto weight = [&src](double x) { return src.measure_weight(x); };
    return SpectralBasis(std::move(levels), src.domain(), weight, src.quadrature(),
                         src.area_factor());
}

int cmd_verify(const VerifyOptions& opt) {
    SpectralBasis built = build_basis(opt.basis);
    SpectralBasis basis = opt.perturb != 0.0 ? perturbed_basis(built, opt.perturb) : built;
    std::size_t trunc = std::min(opt.truncation, basis.level_count());
    HeatKernel kernel(basis, trunc, opt.t_min);
    const double T = opt.horizon;
    const auto& quad = basis.quadrature();

    struct Row {
        std::string name;
        double residual;
        double tolerance;
        bool pass;
    };
    std::vector<Row> rows;
    auto check = [&rows](const std::string& name, double residual, double tolerance) {
        rows.push_back({name, residual, tolerance, residual <= tolerance});
    };

    check("orthonormality", basis.orthonormality_defect(basis.level_count()), 1e-8);

    // Chapman-Kolmogorov on a 5x5 probe grid through an intermediate time
    {
        double worst = 0.0;
        std::vector<double> probes = {0.1, 0.3, 0.5, 0.7, 0.9};
        for (double x : probes)
            for (double y : probes) {
                double direct = kernel.eval(x, T, y);
                double composed = quad.integrate([&](double z) {
                    return kernel.eval(x, 0.4 * T, z) * kernel.eval(z, 0.6 * T, y);
                });
                worst = std::max(worst, std::abs(direct - composed));
            }
        check("chapman_kolmogorov", worst, 1e-6);
    }

    // partition-function trace identity
    {
        double worst = 0.0;
        for (double t : {0.5, 1.0, 2.0})
            worst = std::max(worst, std::abs(kernel.partition_function(t) -
                                             kernel.partition_function_trace(t)));
        check("partition_trace_identity", worst, 1e-8);
    }

    // probability conservation and duality for the default level processes
    try {
        double worst_cons = 0.0, worst_dual = 0.0, worst_norm = 0.0;
        for (std::size_t m = 0; m < std::min<std::size_t>(3, trunc); ++m) {
            auto p = default_level_process(kernel, m, T);
            for (double t : {0.0, 0.25 * T, 0.5 * T, 0.75 * T, T})
                worst_cons = std::max(worst_cons, std::abs(p.conservation(t) - 1.0));
            for (double x : {0.2, 0.5, 0.8}) {
                double mass = quad.integrate(
                    [&](double y) { return p.forward_density(x, 0.2 * T, y, 0.8 * T); });
                worst_norm = std::max(worst_norm, std::abs(mass - 1.0));
                double lhs = p.u(x, 0.2 * T) * p.v(x, 0.2 * T) *
                             p.forward_density(x, 0.2 * T, 0.6, 0.8 * T);
                double rhs = p.u(0.6, 0.8 * T) * p.v(0.6, 0.8 * T) *
                             p.backward_density(0.6, 0.8 * T, x, 0.2 * T);
                worst_dual = std::max(worst_dual, std::abs(lhs - rhs));
            }
        }
        check("probability_conservation", worst_cons, 1e-8);
        check("transition_normalization", worst_norm, 1e-6);
        check("duality", worst_dual, 1e-8);
    } catch (const std::exception&) {
        rows.push_back({"level_process_construction", 1.0, 0.0, false});
    }

    // Lemma-1 normalization of the signed level measures
    {
        double worst = 0.0;
        for (std::size_t m = 0; m < std::min<std::size_t>(4, basis.level_count()); ++m)
            worst = std::max(worst, std::abs(lemma1_normalization(basis, m, T) - 1.0));
        check("lemma1_normalization", worst, 1e-6);
    }

    // biorthonormality of the default time-dependent system
    try {
        std::vector<LevelProcess> procs;
        for (std::size_t m = 0; m < trunc; ++m)
            procs.push_back(default_biorthonormal_process(kernel, m, T));
        auto w = gibbs_weights(basis, T, trunc);
        double worst = 0.0;
        for (double t : {0.0, 0.5 * T, T}) {
            auto Rt = make_timedep(procs, w, t);
            worst = std::max(worst, std::abs(Rt.trace() - 1.0));
        }
        check("biorthonormality_trace", worst, 1e-8);

        StatOperator R(basis, w);
        double worst_gibbs = 0.0;
        std::vector<std::function<double(double)>> observables = {
            [](double) { return 1.0; }, [](double x) { return x * x; },
            [](double x) { return x < 0.5 ? 1.0 : 0.0; }};
        for (const auto& b : observables)
            worst_gibbs = std::max(
                worst_gibbs, std::abs(R.trace_RB(b) - stationary_expectation(kernel, T, b)));
        check("gibbs_trace_expectation", worst_gibbs, 1e-8);
    } catch (const std::exception&) {
        rows.push_back({"biorthonormal_construction", 1.0, 0.0, false});
    }

    // a probe below t_min must be refused; the suite continues either way
    {
        bool refused = false;
        try {
            kernel.eval(0.5, 0.5 * opt.t_min, 0.5);
        } catch (const std::domain_error&) {
            refused = true;
        }
        rows.push_back({"t_min_refusal", refused ? 0.0 : 1.0, 0.0, refused});
    }

    std::ostringstream table;
    table << "check,residual,tolerance,status\n";
    bool all_pass = true;
    for (const auto& r : rows) {
        table << r.name << ',' << fmt(r.residual) << ',' << fmt(r.tolerance) << ','
              << (r.pass ? "pass" : "fail") << '\n';
        all_pass = all_pass && r.pass;
    }
    std::filesystem::create_directories(opt.out_dir);
    atomic_write(std::filesystem::path(opt.out_dir) / "verify.txt", table.str());
    std::cout << table.str();

    Manifest man;
    man.add("command", std::string("verify"));
    describe_basis(man, opt.basis, basis);
    man.add("horizon", opt.horizon);
    man.add("truncation", trunc);
    man.add("t_min", opt.t_min);
    if (opt.perturb != 0.0) man.add("perturb", opt.perturb);
    man.write(opt.out_dir);
    return all_pass ? kExitOk : kExitCheckFailed;
}

struct BridgeOptions {
    BasisOptions basis;
    double horizon = 1.0;
    std::size_t truncation = 6;
    double t_min = 0.05;
    std::string mu0_file;
    std::string muT_file;
    double tol = 1e-10;
    std::size_t max_iter = 500;
    std::string out_dir = ".";
};

int cmd_bridge(const BridgeOptions& opt) {
    SpectralBasis basis = build_basis(opt.basis);
    std::size_t trunc = std::min(opt.truncation, basis.level_count());
    HeatKernel kernel(basis, trunc, opt.t_min);
    auto mu0 = load_density_csv(opt.mu0_file, basis.quadrature().size());
    auto muT = load_density_csv(opt.muT_file, basis.quadrature().size());

    auto sol = schroedinger_solve(kernel, opt.horizon, mu0, muT, opt.tol, opt.max_iter);

    std::filesystem::create_directories(opt.out_dir);
    atomic_write(std::filesystem::path(opt.out_dir) / "phi.csv", grid_vector_csv(sol.phi0));
    atomic_write(std::filesystem::path(opt.out_dir) / "psi.csv", grid_vector_csv(sol.psiT));
    std::ostringstream res;
    res << "iterations=" << sol.iterations << "\nresidual0=" << fmt(sol.residual0)
        << "\nresidualT=" << fmt(sol.residualT)
        << "\nconverged=" << (sol.converged ? "true" : "false") << "\n";
    atomic_write(std::filesystem::path(opt.out_dir) / "residuals.txt", res.str());
    std::cout << res.str();

    Manifest man;
    man.add("command", std::string("bridge"));
    describe_basis(man, opt.basis, basis);
    man.add("horizon", opt.horizon);
    man.add("truncation", trunc);
    man.add("t_min", opt.t_min);
    man.add("mu0_file", opt.mu0_file);
    man.add("muT_file", opt.muT_file);
    man.add("tol", opt.tol);
    man.add("max_iter", opt.max_iter);
    man.write(opt.out_dir);

    if (!sol.converged) {
        std::cerr << "bridge: no convergence after " << opt.max_iter
                  << " iterations (residuals " << fmt(sol.residual0) << ", "
                  << fmt(sol.residualT) << ")\n";
        return kExitNoConvergence;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral heat-semigroup Bernstein process toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Key=value config file; group keys in a [subcommand] section");

    std::string spectrum_out = ".";
    BasisOptions spectrum_basis;
    auto* spectrum = app.add_subcommand("spectrum", "Emit eigenvalue/normalizer tables");
    add_basis_options(spectrum, spectrum_basis);
    spectrum->add_option("--out", spectrum_out, "Output directory");

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Sample trajectories and run fit tests");
    add_basis_options(simulate, sim.basis);
    simulate->add_option("--horizon", sim.horizon, "Process horizon T")->check(CLI::PositiveNumber);
    simulate->add_option("--truncation", sim.truncation, "Kernel truncation level")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--t-min", sim.t_min, "Certified minimum kernel time")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--process", sim.process, "level, mixture, or stationary")
        ->check(CLI::IsMember({"level", "mixture", "stationary"}));
    simulate->add_option("--level", sim.level, "Spectral level for process=level");
    simulate->add_option("--times", sim.times, "Sampling time grid");
    simulate->add_option("--paths", sim.paths, "Number of paths")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed, "Master seed");
    simulate->add_option("--bins", sim.bins, "Histogram bins for fit tests")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--alpha", sim.alpha, "Fit test significance level");
    simulate->add_option("--weights", sim.weights_file, "Weights CSV for process=mixture");
    simulate->add_option("--out", sim.out_dir, "Output directory");

    EntropyOptions ent;
    auto* entropy_cmd = app.add_subcommand("entropy", "Solve the maximal-entropy Gibbs problem");
    add_basis_options(entropy_cmd, ent.basis);
    entropy_cmd->add_option("--lambda", ent.lambda_target, "Target spectral average")->required();
    entropy_cmd->add_option("--tol", ent.tol, "Constraint residual tolerance")
        ->check(CLI::PositiveNumber);
    entropy_cmd->add_option("--out", ent.out_dir, "Output directory");

    VerifyOptions ver;
    auto* verify = app.add_subcommand("verify", "Run the cross-module invariant suite");
    add_basis_options(verify, ver.basis);
    verify->add_option("--horizon", ver.horizon, "Process horizon T")->check(CLI::PositiveNumber);
    verify->add_option("--truncation", ver.truncation, "Kernel truncation level")
        ->check(CLI::PositiveNumber);
    verify->add_option("--t-min", ver.t_min, "Certified minimum kernel time")
        ->check(CLI::PositiveNumber);
    verify->add_option("--perturb", ver.perturb,
                       "Mix this fraction of level 1 into level 2 (negative control)");
    verify->add_option("--out", ver.out_dir, "Output directory");

    BridgeOptions br;
    auto* bridge = app.add_subcommand("bridge", "Solve the marginal-matching system");
    add_basis_options(bridge, br.basis);
    bridge->add_option("--horizon", br.horizon, "Process horizon T")->check(CLI::PositiveNumber);
    bridge->add_option("--truncation", br.truncation, "Kernel truncation level")
        ->check(CLI::PositiveNumber);
    bridge->add_option("--t-min", br.t_min, "Certified minimum kernel time")
        ->check(CLI::PositiveNumber);
    bridge->add_option("--mu0", br.mu0_file, "Initial marginal density CSV")->required();
    bridge->add_option("--muT", br.muT_file, "Final marginal density CSV")->required();
    bridge->add_option("--tol", br.tol, "Residual tolerance")->check(CLI::PositiveNumber);
    bridge->add_option("--max-iter", br.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
    bridge->add_option("--out", br.out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (spectrum->parsed()) return cmd_spectrum(spectrum_basis, spectrum_out);
        if (simulate->parsed()) return cmd_simulate(sim);
        if (entropy_cmd->parsed()) return cmd_entropy(ent);
        if (verify->parsed()) return cmd_verify(ver);
        if (bridge->parsed()) return cmd_bridge(br);
    } catch (const bernstein::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const bernstein::PositivityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
    return kExitConfig;
}
