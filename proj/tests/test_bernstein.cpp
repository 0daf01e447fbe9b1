#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bernstein/bessel.hpp"
#include "bernstein/heat_kernel.hpp"
#include "bernstein/level_process.hpp"
#include "bernstein/mixture.hpp"
#include "bernstein/stat_operator.hpp"

using namespace bernstein;

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Normalized interval process with phi = 1 + a sqrt2 cos(pi x) and
/// psi proportional to 1 + b sqrt2 cos(pi x).
LevelProcess interval_process(const HeatKernel& kernel, double a, double b, double T) {
    double scale = 1.0 + a * b * std::exp(-T * kernel.basis().eigenvalue(1));
    std::vector<double> phi = {1.0, a};
    std::vector<double> psi = {1.0 / scale, b / scale};
    return make_level_process(kernel, 1, BoundarySpec(phi), BoundarySpec(psi), T);
}

/// Disk process whose time-t marginal is (1/pi)(1 + e^{-lambda_1 t} J0(z1 r)).
LevelProcess disk_mode_process(const HeatKernel& kernel, double T) {
    const auto& basis = kernel.basis();
    double j0z1 = std::abs(bessel_j0(bessel_j1_positive_zeros(1)[0]));
    std::vector<double> phi = {std::sqrt(2.0) / (2.0 * kPi), j0z1 / (std::sqrt(2.0) * kPi)};
    std::vector<double> psi = {std::sqrt(2.0) / 2.0};
    (void)basis;
    return make_level_process(kernel, 1, BoundarySpec(phi), BoundarySpec(psi), T);
}

}  // namespace

TEST_CASE("conservation law holds at five times", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    auto proc = interval_process(kernel, 0.4, 0.3, 1.0);
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0})
        CHECK_THAT(proc.conservation(t), Catch::Matchers::WithinAbs(1.0, 1e-8));

    auto disk = disk_basis(6, 64);
    HeatKernel dk(disk, 6, 0.05);
    auto dproc = disk_mode_process(dk, 1.0);
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0})
        CHECK_THAT(dproc.conservation(t), Catch::Matchers::WithinAbs(1.0, 1e-8));
}

TEST_CASE("marginal density integrates to one", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    auto proc = interval_process(kernel, 0.4, 0.3, 1.0);
    auto all = [](double) { return true; };
    for (double t : {0.0, 0.3, 0.7, 1.0})
        CHECK_THAT(proc.marginal_probability(t, all), Catch::Matchers::WithinAbs(1.0, 1e-6));
}

TEST_CASE("forward and backward transition densities are dual", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    auto proc = interval_process(kernel, 0.4, 0.3, 1.0);
    double s = 0.3, t = 0.8;
    for (double x : {0.2, 0.5, 0.9})
        for (double y : {0.15, 0.6, 0.85}) {
            double lhs = proc.u(x, s) * proc.v(x, s) * proc.forward_density(x, s, y, t);
            double rhs = proc.u(y, t) * proc.v(y, t) * proc.backward_density(y, t, x, s);
            CHECK_THAT(lhs - rhs, Catch::Matchers::WithinAbs(0.0, 1e-8));
        }
    // each transition density integrates to 1 against the basis measure
    const auto& quad = basis.quadrature();
    double pf = quad.integrate([&](double y) { return proc.forward_density(0.4, s, y, t); });
    double pb = quad.integrate([&](double y) { return proc.backward_density(0.4, t, y, s); });
    CHECK_THAT(pf, Catch::Matchers::WithinAbs(1.0, 1e-8));
    CHECK_THAT(pb, Catch::Matchers::WithinAbs(1.0, 1e-8));
    auto masses = proc.forward_masses(0.4, s, t);
    double total = 0.0;
    for (double m : masses) total += m;
    CHECK_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("two-sided density has unit mass between the pins", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    const auto& quad = basis.quadrature();
    double mass = quad.integrate(
        [&](double z) { return two_sided_density(kernel, 0.7, 0.9, z, 0.5, 0.2, 0.1); });
    CHECK_THAT(mass, Catch::Matchers::WithinAbs(1.0, 1e-8));
    CHECK_THROWS_AS(two_sided_density(kernel, 0.7, 0.3, 0.5, 0.5, 0.2, 0.6),
                    std::invalid_argument);
}

TEST_CASE("uniform ground process on the disk stays uniform", "[bernstein]") {
    auto basis = disk_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    // phi = psi = 1/sqrt(pi): the ground state of the radial hierarchy
    std::vector<double> c = {1.0 / (std::sqrt(2.0) * std::sqrt(kPi))};
    auto proc = make_level_process(kernel, 0, BoundarySpec(c), BoundarySpec(c), 1.0);
    auto in_half = [](double r) { return r <= 0.5; };
    const auto& quad = basis.quadrature();
    double unif = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i)
        if (in_half(quad.nodes[i])) unif += 2.0 * quad.weights[i];
    for (double t : {0.0, 0.3, 0.6, 1.0})
        CHECK_THAT(proc.marginal_probability(t, in_half),
                   Catch::Matchers::WithinAbs(unif, 1e-12));
    CHECK_THAT(unif, Catch::Matchers::WithinAbs(0.25, 5e-3));
}

TEST_CASE("first excited disk mode: marginal probability and decay law", "[bernstein]") {
    auto basis = disk_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    auto proc = disk_mode_process(kernel, 1.0);
    const double lam1 = basis.eigenvalue(1);
    const double z1 = bessel_j1_positive_zeros(1)[0];
    const auto& quad = basis.quadrature();

    // reference value of the t = 0 probability of {r <= 1/2}
    CHECK_THAT(proc.marginal_probability(0.0, [](double r) { return r <= 0.5; }),
               Catch::Matchers::WithinAbs(0.4015577099679437, 5e-3));
    CHECK_THAT(proc.expectation([](double r) { return r * r; }, 1.0),
               Catch::Matchers::WithinAbs(0.5, 2e-3));

    struct Probe {
        double lo, hi;
        double integral;  // reference value of int_F r J0(z1 r) dr
    };
    const Probe probes[] = {
        {0.0, 0.3, 0.0379653985849319},
        {0.0, 0.6, 0.0845650465341603},
        {0.2, 0.8, 0.0470557388328943},
    };
    for (const auto& pr : probes) {
        auto in_set = [&](double r) { return r >= pr.lo && r <= pr.hi; };
        double unif = 0.0, bump = 0.0;
        for (std::size_t i = 0; i < quad.size(); ++i)
            if (in_set(quad.nodes[i])) {
                unif += 2.0 * quad.weights[i];
                bump += quad.weights[i] * bessel_j0(z1 * quad.nodes[i]);
            }
        CHECK_THAT(bump, Catch::Matchers::WithinAbs(pr.integral, 1e-2));
        double prev = 1e300;
        for (int k = 0; k <= 5; ++k) {
            double t = 0.2 * k;
            double dev = proc.marginal_probability(t, in_set) - unif;
            // exact exponential decay of the deviation from uniformity
            CHECK_THAT(dev, Catch::Matchers::WithinAbs(2.0 * std::exp(-lam1 * t) * bump, 1e-12));
            CHECK(std::abs(dev) < prev);
            prev = std::abs(dev);
        }
    }
}

TEST_CASE("every level process carries total probability one", "[bernstein]") {
    auto basis = disk_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    auto all = [](double) { return true; };
    for (std::size_t m = 0; m <= 5; ++m) {
        auto proc = default_biorthonormal_process(kernel, m, 0.5);
        for (double t : {0.0, 0.25, 0.5})
            CHECK_THAT(proc.marginal_probability(t, all), Catch::Matchers::WithinAbs(1.0, 1e-8));
    }
}

TEST_CASE("normalization gate refuses unnormalized boundary data", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    std::vector<double> phi = {1.3, 0.0};
    std::vector<double> psi = {1.0, 0.0};
    CHECK_THROWS_WITH(make_level_process(kernel, 0, BoundarySpec(phi), BoundarySpec(psi), 1.0),
                      Catch::Matchers::ContainsSubstring("allow_unnormalized"));
    CHECK_NOTHROW(
        make_level_process(kernel, 0, BoundarySpec(phi), BoundarySpec(psi), 1.0, true));
}

TEST_CASE("signed data flag and singular-density refusals", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    auto proc = default_biorthonormal_process(kernel, 1, 1.0);
    CHECK(proc.is_signed());
    // v(., t) vanishes and changes sign, so the forward density is undefined
    CHECK_THROWS_AS(proc.forward_density(0.7, 0.2, 0.3, 0.8), SingularDensityError);
    auto positive = interval_process(kernel, 0.4, 0.3, 1.0);
    CHECK_FALSE(positive.is_signed());
}

TEST_CASE("finite-dimensional distributions from the endpoint measure", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    const double T = 1.0;
    auto proc = interval_process(kernel, 0.4, 0.3, T);
    const auto& quad = basis.quadrature();
    const std::size_t n = quad.size();

    // endpoint masses of the product-form measure, summing to 1
    auto joint = mixed_joint_density({proc}, make_weight_sequence({1.0}));
    std::vector<std::vector<double>> mass(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            mass[i][j] = basis.area_factor() * quad.weights[i] * quad.weights[j] * joint[i][j];

    auto whole = all_nodes(basis);
    CHECK_THAT(fdd_from_measure(kernel, T, mass, {0.5}, {whole}),
               Catch::Matchers::WithinAbs(1.0, 1e-8));

    auto left = node_set(basis, [](double x) { return x < 0.5; });
    for (double t : {0.2, 0.5, 0.8}) {
        double via_measure = fdd_from_measure(kernel, T, mass, {t}, {left});
        double via_forward = proc.marginal_probability(t, [](double x) { return x < 0.5; });
        CHECK_THAT(via_measure - via_forward, Catch::Matchers::WithinAbs(0.0, 1e-8));
    }

    // two-time box probability decomposes through the forward transitions
    auto right = node_set(basis, [](double x) { return x >= 0.5; });
    double p2 = fdd_from_measure(kernel, T, mass, {0.3, 0.7}, {left, right});
    double direct = 0.0;
    for (std::size_t i : left) {
        auto masses = proc.forward_masses(quad.nodes[i], 0.3, 0.7);
        double hop = 0.0;
        for (std::size_t j : right) hop += masses[j];
        direct += basis.area_factor() * quad.weights[i] * proc.u(quad.nodes[i], 0.3) *
                  proc.v(quad.nodes[i], 0.3) * hop;
    }
    CHECK_THAT(p2 - direct, Catch::Matchers::WithinAbs(0.0, 1e-8));

    // endpoint consistency: row sums of the mass matrix reproduce mu_0
    auto rho0 = proc.marginal_grid(0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += mass[i][j];
        worst = std::max(worst,
                         std::abs(row - basis.area_factor() * quad.weights[i] * rho0[i]));
    }
    CHECK(worst <= 1e-4);

    CHECK_THROWS_AS(fdd_from_measure(kernel, T, mass, {0.0}, {whole}), std::invalid_argument);
    CHECK_THROWS_AS(fdd_from_measure(kernel, T, mass, {0.8, 0.3}, {whole, whole}),
                    std::invalid_argument);
}

TEST_CASE("product-form criterion separates Markov from non-Markov measures", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    const double T = 1.0;
    auto proc = interval_process(kernel, 0.4, 0.3, T);
    auto joint = mixed_joint_density({proc}, make_weight_sequence({1.0}));

    auto cert = is_product_form(kernel, T, joint);
    CHECK(cert.is_product);
    CHECK(cert.sigma2 <= 1e-6 * cert.sigma1);
    // recovered rank-1 factors reproduce phi and psi up to one scalar
    auto phi = proc.u_grid(0.0);
    double ratio = cert.nu0[10] / phi[10];
    for (std::size_t i = 0; i < phi.size(); i += 7)
        CHECK_THAT(cert.nu0[i] / phi[i], Catch::Matchers::WithinRel(ratio, 1e-6));

    // the Gibbs diagonal measure is genuinely non-product
    auto diag = gibbs_diagonal_measure(kernel, T);
    auto bad = is_product_form(kernel, T, diag);
    CHECK_FALSE(bad.is_product);
    CHECK(bad.sigma2 > 1e-3 * bad.sigma1);

    // a two-level mixture is also non-product
    auto proc2 = interval_process(kernel, -0.2, 0.5, T);
    auto mixed = mixed_joint_density({proc, proc2}, make_weight_sequence({0.6, 0.4}));
    CHECK_FALSE(is_product_form(kernel, T, mixed).is_product);
}

TEST_CASE("marginal-matching iteration recovers the boundary factors", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    const double T = 1.0;
    auto proc = interval_process(kernel, 0.4, 0.3, T);
    auto mu0 = proc.marginal_grid(0.0);
    auto muT = proc.marginal_grid(T);

    auto sol = schroedinger_solve(kernel, T, mu0, muT, 1e-12, 500);
    CHECK(sol.converged);
    CHECK(sol.iterations <= 500);

    // fix the gauge of the true factors to match the solver's convention
    const auto& quad = basis.quadrature();
    auto phi = proc.u_grid(0.0);
    auto psi = proc.v_grid(T);
    double c = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i) c += quad.weights[i] * phi[i];
    c *= basis.area_factor();
    double worst = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i) {
        worst = std::max(worst, std::abs(sol.phi0[i] - phi[i] / c));
        worst = std::max(worst, std::abs(sol.psiT[i] - psi[i] * c));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("uniform marginals give constant factors immediately", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    std::vector<double> unif(basis.quadrature().size(), 1.0);
    auto sol = schroedinger_solve(kernel, 2.0, unif, unif, 1e-12, 50);
    CHECK(sol.converged);
    for (double x : sol.phi0) CHECK_THAT(x, Catch::Matchers::WithinAbs(1.0, 1e-10));
    for (double x : sol.psiT) CHECK_THAT(x, Catch::Matchers::WithinAbs(1.0, 1e-10));
}

TEST_CASE("iteration count does not grow with the horizon", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    const auto& quad = basis.quadrature();
    std::vector<double> mu0(quad.size()), muT(quad.size());
    for (std::size_t i = 0; i < quad.size(); ++i) {
        mu0[i] = 1.0 + 0.3 * std::sqrt(2.0) * std::cos(kPi * quad.nodes[i]);
        muT[i] = 1.0 - 0.25 * std::sqrt(2.0) * std::cos(kPi * quad.nodes[i]);
    }
    std::size_t prev = 0;
    for (double T : {1.0, 0.5, 0.25}) {
        auto sol = schroedinger_solve(kernel, T, mu0, muT, 1e-12, 500);
        CHECK(sol.converged);
        if (prev != 0) CHECK(prev <= sol.iterations);
        prev = sol.iterations;
    }
}

TEST_CASE("marginal matching rejects bad inputs and reports non-convergence", "[bernstein]") {
    auto basis = interval_basis(6, 64);
    HeatKernel kernel(basis, 6, 0.05);
    std::vector<double> unif(basis.quadrature().size(), 1.0);
    auto bad = unif;
    bad[3] = -0.5;
    CHECK_THROWS_AS(schroedinger_solve(kernel, 1.0, bad, unif, 1e-12, 50), PositivityError);
    auto off = unif;
    for (double& x : off) x *= 1.5;
    CHECK_THROWS_WITH(schroedinger_solve(kernel, 1.0, off, unif, 1e-12, 50),
                      Catch::Matchers::ContainsSubstring("integrate to 1"));

    const auto& quad = basis.quadrature();
    std::vector<double> mu0(quad.size());
    for (std::size_t i = 0; i < quad.size(); ++i)
        mu0[i] = 1.0 + 0.4 * std::sqrt(2.0) * std::cos(kPi * quad.nodes[i]);
    auto sol = schroedinger_solve(kernel, 1.0, mu0, unif, 1e-15, 1);
    CHECK_FALSE(sol.converged);
}
