#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace bernstein {

/// Fixed quadrature rule on (0,1). Weights carry the measure weight of the
/// basis (1 on the interval, r for the radial disk), so inner products are
/// plain weighted sums over the nodes.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    double integrate(const std::function<double(double)>& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }

    double total_weight() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }

    std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre nodes and weights on (0,1), by Newton iteration on the
/// Legendre polynomial from the Chebyshev initial guess.
inline QuadratureRule gauss_legendre_01(std::size_t order) {
    if (order == 0) throw std::invalid_argument("gauss_legendre_01: order must be positive");
    const double pi = 3.14159265358979323846;
    QuadratureRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const std::size_t half = (order + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double x = std::cos(pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(order) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence on [-1,1]
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= order; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]
        rule.nodes[i] = 0.5 * (1.0 - x);
        rule.weights[i] = 0.5 * w;
        rule.nodes[order - 1 - i] = 0.5 * (1.0 + x);
        rule.weights[order - 1 - i] = 0.5 * w;
    }
    return rule;
}

/// Same rule with an extra pointwise weight folded into the node weights.
inline QuadratureRule weighted_rule(std::size_t order,
                                    const std::function<double(double)>& measure_weight) {
    QuadratureRule rule = gauss_legendre_01(order);
    for (std::size_t i = 0; i < rule.size(); ++i) rule.weights[i] *= measure_weight(rule.nodes[i]);
    return rule;
}

}  // namespace bernstein
