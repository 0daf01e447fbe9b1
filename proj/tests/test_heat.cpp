#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bernstein/heat_kernel.hpp"
#include "bernstein/spectral_basis.hpp"

using namespace bernstein;

namespace {
constexpr double kPi = 3.14159265358979323846;

/// Independent direct summation of the interval kernel, bypassing the basis
/// machinery.
double interval_kernel_oracle(double x, double t, double y, std::size_t levels) {
    double s = 1.0;
    for (std::size_t m = 1; m < levels; ++m)
        s += 2.0 * std::exp(-t * 0.5 * (m * kPi) * (m * kPi)) * std::cos(m * kPi * x) *
             std::cos(m * kPi * y);
    return s;
}
}  // namespace

TEST_CASE("interval kernel matches the direct-summation oracle", "[heat]") {
    auto basis = interval_basis(8, 64);
    HeatKernel kernel(basis, 3, 0.05);
    // converged reference value of g(0.3, 1, 0.3)
    CHECK_THAT(kernel.eval(0.3, 1.0, 0.3),
               Catch::Matchers::WithinAbs(1.0049693, 1e-6));
    CHECK_THAT(kernel.eval(0.3, 1.0, 0.3),
               Catch::Matchers::WithinAbs(1.0049694696882482, 1e-13));
    HeatKernel full(basis, 8, 0.05);
    for (double x : {0.1, 0.45, 0.9})
        for (double y : {0.2, 0.8})
            CHECK_THAT(full.eval(x, 0.3, y),
                       Catch::Matchers::WithinAbs(interval_kernel_oracle(x, 0.3, y, 8), 1e-13));
}

TEST_CASE("kernel is symmetric exactly", "[heat]") {
    auto basis = disk_basis(8, 64);
    HeatKernel kernel(basis, 6, 0.05);
    for (double x : {0.15, 0.5, 0.85})
        for (double y : {0.3, 0.7})
            CHECK(kernel.eval(x, 0.6, y) == kernel.eval(y, 0.6, x));
}

TEST_CASE("Chapman-Kolmogorov composition on a 5x5 grid", "[heat]") {
    auto basis = interval_basis(8, 64);
    HeatKernel kernel(basis, 6, 0.05);
    const auto& quad = basis.quadrature();
    std::vector<double> probes = {0.1, 0.3, 0.5, 0.7, 0.9};
    for (double total : {0.4, 1.0, 1.6}) {
        double worst = 0.0;
        for (double x : probes)
            for (double y : probes) {
                double composed = quad.integrate([&](double z) {
                    return kernel.eval(x, 0.35 * total, z) * kernel.eval(z, 0.65 * total, y);
                });
                worst = std::max(worst, std::abs(composed - kernel.eval(x, total, y)));
            }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("partition function trace identity", "[heat]") {
    for (bool disk : {false, true}) {
        auto basis = disk ? disk_basis(10, 64) : interval_basis(10, 64);
        HeatKernel kernel(basis, 8, 0.05);
        for (double T : {0.5, 1.0, 2.0})
            CHECK_THAT(kernel.partition_function_trace(T),
                       Catch::Matchers::WithinAbs(kernel.partition_function(T), 1e-8));
    }
}

TEST_CASE("three-level interval partition value", "[heat]") {
    auto basis = interval_basis(8, 64);
    HeatKernel kernel(basis, 3, 0.05);
    // 1 + e^{-pi^2/2} + e^{-2 pi^2}
    CHECK_THAT(kernel.partition_function(1.0),
               Catch::Matchers::WithinAbs(1.0071918860311144, 1e-12));
}

TEST_CASE("semigroup action is diagonal and the identity at t=0", "[heat]") {
    auto basis = interval_basis(8, 64);
    HeatKernel kernel(basis, 6, 0.05);
    std::vector<double> c = {1.0, -0.5, 0.25, 0.0, 0.1, -0.2};
    CHECK(kernel.semigroup_apply(0.0, c) == c);
    auto half = kernel.semigroup_apply(0.4, c);
    auto full = kernel.semigroup_apply(0.4, half);
    auto direct = kernel.semigroup_apply(0.8, c);
    for (std::size_t m = 0; m < c.size(); ++m)
        CHECK_THAT(full[m], Catch::Matchers::WithinAbs(direct[m], 1e-15));
    CHECK_THROWS_AS(kernel.semigroup_apply(-0.1, c), std::invalid_argument);
}

TEST_CASE("evaluation below t_min is refused with a diagnostic", "[heat]") {
    auto basis = interval_basis(8, 64);
    HeatKernel kernel(basis, 6, 0.05);
    CHECK_THROWS_WITH(kernel.eval(0.5, 0.01, 0.5),
                      Catch::Matchers::ContainsSubstring("t_min"));
    CHECK_THROWS_AS(kernel.grid_matrix(0.001), std::domain_error);
    CHECK_NOTHROW(kernel.eval(0.5, 0.05, 0.5));
}

TEST_CASE("certify_t_min yields a nonnegative kernel grid", "[heat]") {
    auto basis = interval_basis(10, 64);
    double tmin = HeatKernel::certify_t_min(basis, 8);
    HeatKernel kernel(basis, 8, tmin);
    auto g = kernel.grid_matrix(tmin);
    double lo = 0.0;
    for (const auto& row : g)
        for (double v : row) lo = std::min(lo, v);
    CHECK(lo >= -1e-8);
}

TEST_CASE("truncation_level certifies the spectral tail", "[heat]") {
    auto basis = interval_basis(8, 64);
    CHECK(truncation_level(basis, 1.0, 1e-9) == 3);
    CHECK(truncation_level(basis, 1.0, 1e30) == 1);
    // tails shrink with larger t_min
    CHECK(truncation_level(basis, 2.0, 1e-9) <= truncation_level(basis, 0.5, 1e-9));
    CHECK_THROWS_WITH(truncation_level(basis, 0.001, 1e-30),
                      Catch::Matchers::ContainsSubstring("achievable tolerance"));
    CHECK_THROWS_AS(truncation_level(basis, -1.0, 1e-9), std::invalid_argument);
}

TEST_CASE("kernel constructor validates truncation and t_min", "[heat]") {
    auto basis = interval_basis(4, 64);
    CHECK_THROWS_AS(HeatKernel(basis, 0, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(HeatKernel(basis, 5, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(HeatKernel(basis, 3, 0.0), std::invalid_argument);
}
