#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "bernstein/heat_kernel.hpp"
#include "bernstein/level_process.hpp"
#include "bernstein/spectral_basis.hpp"

namespace bernstein {

/// Target spectral average outside the range reachable by positive beta.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Finitely truncated probability weights over basis levels. The mass beyond
/// the truncation is tracked, never silently renormalized away.
struct WeightSequence {
    std::vector<double> weights;
    double truncation_deficit = 0.0;  // 1 - sum of weights
};

inline WeightSequence make_weight_sequence(std::vector<double> weights) {
    double sum = 0.0;
    for (double p : weights) {
        if (!(p >= 0.0) || p > 1.0)
            throw std::invalid_argument("make_weight_sequence: weights must lie in [0,1]");
        sum += p;
    }
    if (sum > 1.0 + 1e-12)
        throw std::invalid_argument("make_weight_sequence: weights must sum to at most 1");
    WeightSequence w;
    w.weights = std::move(weights);
    w.truncation_deficit = std::max(0.0, 1.0 - sum);
    return w;
}

struct GibbsParameters {
    double beta = 0.0;           // inverse-temperature parameter, units of time
    double Z = 0.0;              // partition value over the truncation
    double lambda_target = 0.0;  // prescribed spectral average
};

namespace detail {

/// Gibbs weights over an explicit eigenvalue list; exponents shifted by the
/// ground eigenvalue so large beta never overflows.
inline std::vector<double> gibbs_weights_raw(const std::vector<double>& lambda, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("gibbs_weights: beta must be positive");
    if (lambda.empty()) throw std::invalid_argument("gibbs_weights: empty spectrum");
    double lam0 = lambda[0];
    for (double l : lambda) lam0 = std::min(lam0, l);
    std::vector<double> p(lambda.size());
    double z = 0.0;
    for (std::size_t m = 0; m < lambda.size(); ++m) {
        p[m] = std::exp(-beta * (lambda[m] - lam0));
        z += p[m];
    }
    for (double& x : p) x /= z;
    return p;
}

inline double mean_energy_raw(const std::vector<double>& lambda, double beta) {
    auto p = gibbs_weights_raw(lambda, beta);
    double e = 0.0;
    for (std::size_t m = 0; m < lambda.size(); ++m) e += p[m] * lambda[m];
    return e;
}

inline double energy_variance_raw(const std::vector<double>& lambda, double beta) {
    auto p = gibbs_weights_raw(lambda, beta);
    double e = 0.0, e2 = 0.0;
    for (std::size_t m = 0; m < lambda.size(); ++m) {
        e += p[m] * lambda[m];
        e2 += p[m] * lambda[m] * lambda[m];
    }
    return e2 - e * e;
}

inline std::vector<double> leading_eigenvalues(const SpectralBasis& basis,
                                               std::size_t level_count) {
    if (level_count == 0 || level_count > basis.level_count())
        throw std::invalid_argument("level_count outside [1, basis levels]");
    std::vector<double> lambda(level_count);
    for (std::size_t m = 0; m < level_count; ++m) lambda[m] = basis.eigenvalue(m);
    return lambda;
}

}  // namespace detail

inline WeightSequence gibbs_weights(const SpectralBasis& basis, double beta,
                                    std::size_t level_count) {
    return make_weight_sequence(
        detail::gibbs_weights_raw(detail::leading_eigenvalues(basis, level_count), beta));
}

/// S(p) = sum p_m ln(1/p_m), with x ln(1/x) = 0 at x = 0.
inline double entropy(const WeightSequence& w) {
    double s = 0.0;
    for (double p : w.weights)
        if (p > 0.0) s -= p * std::log(p);
    return s;
}

inline double mean_energy(const SpectralBasis& basis, double beta, std::size_t level_count) {
    return detail::mean_energy_raw(detail::leading_eigenvalues(basis, level_count), beta);
}

/// Inverts the mean-energy equation for beta: monotone bisection on a
/// geometrically widened bracket, then Newton polish with the analytic
/// derivative (negative energy variance).
inline GibbsParameters solve_beta(const std::vector<double>& lambda, double lambda_target,
                                  double tol) {
    if (lambda.size() < 2)
        throw std::invalid_argument("solve_beta: need at least two spectral levels");
    double lam0 = lambda[0], lam_next = lambda[1];
    for (double l : lambda) {
        if (l < lam0) {
            lam_next = lam0;
            lam0 = l;
        } else if (l < lam_next) {
            lam_next = l;
        }
    }
    if (!(lambda_target > lam0)) {
        std::ostringstream msg;
        msg << "solve_beta: target " << lambda_target << " is at or below the ground eigenvalue "
            << lam0 << "; no positive-beta Gibbs weights reach it";
        throw InfeasibleError(msg.str());
    }
    double scale = lam_next - lam0;
    if (!(scale > 0.0)) scale = 1.0;
    double lo = 1e-3 / scale, hi = 1e3 / scale;
    // mean energy decreases in beta: need E(lo) > target > E(hi)
    int widen = 0;
    while (detail::mean_energy_raw(lambda, lo) <= lambda_target && widen++ < 60) lo *= 0.25;
    if (detail::mean_energy_raw(lambda, lo) <= lambda_target) {
        std::ostringstream msg;
        msg << "solve_beta: target " << lambda_target
            << " exceeds the maximum mean energy reachable over this truncation ("
            << detail::mean_energy_raw(lambda, lo)
            << "); infeasible for positive beta, possibly from too small a truncation";
        throw InfeasibleError(msg.str());
    }
    widen = 0;
    while (detail::mean_energy_raw(lambda, hi) >= lambda_target && widen++ < 60) hi *= 4.0;
    if (detail::mean_energy_raw(lambda, hi) >= lambda_target)
        throw InfeasibleError("solve_beta: bracket widening failed at large beta");

    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (detail::mean_energy_raw(lambda, mid) > lambda_target)
            lo = mid;
        else
            hi = mid;
    }
    double beta = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
        double r = detail::mean_energy_raw(lambda, beta) - lambda_target;
        if (std::abs(r) < tol) break;
        double var = detail::energy_variance_raw(lambda, beta);
        if (!(var > 0.0)) break;
        beta += r / var;  // dE/dbeta = -Var
    }
    if (std::abs(detail::mean_energy_raw(lambda, beta) - lambda_target) >= tol)
        throw std::runtime_error("solve_beta: Newton polish failed to meet tolerance");

    GibbsParameters params;
    params.beta = beta;
    params.lambda_target = lambda_target;
    double z = 0.0;
    for (double l : lambda) z += std::exp(-beta * l);
    params.Z = z;
    return params;
}

inline GibbsParameters solve_beta(const SpectralBasis& basis, double lambda_target, double tol,
                                  std::size_t level_count) {
    return solve_beta(detail::leading_eigenvalues(basis, level_count), lambda_target, tol);
}

/// S_max = ln Z(beta) + beta * mean_energy(beta), computed with the ground
/// shift so ln Z never overflows.
inline double max_entropy(const GibbsParameters& params, const std::vector<double>& lambda) {
    double lam0 = lambda[0];
    for (double l : lambda) lam0 = std::min(lam0, l);
    double zs = 0.0;
    for (double l : lambda) zs += std::exp(-params.beta * (l - lam0));
    double energy = detail::mean_energy_raw(lambda, params.beta);
    return std::log(zs) - params.beta * lam0 + params.beta * energy;
}

inline double max_entropy(const GibbsParameters& params, const SpectralBasis& basis,
                          std::size_t level_count) {
    return max_entropy(params, detail::leading_eigenvalues(basis, level_count));
}

// ---------------------------------------------------------------------------
// Mixtures of level processes
// ---------------------------------------------------------------------------

namespace detail {

inline void check_mixture(const std::vector<LevelProcess>& processes, const WeightSequence& w) {
    if (processes.empty()) throw std::invalid_argument("mixture: no processes");
    if (w.weights.size() != processes.size())
        throw std::invalid_argument("mixture: weight count differs from process count");
    const SpectralBasis* basis = &processes[0].basis();
    double T = processes[0].horizon();
    for (const auto& p : processes) {
        if (&p.basis() != basis) throw std::invalid_argument("mixture: processes mix bases");
        if (p.horizon() != T) throw std::invalid_argument("mixture: mismatched horizons");
    }
}

}  // namespace detail

/// Joint endpoint density g(x,T,y) sum_m p_m phi_m(x) psi_m(y) on the grid,
/// with g in the basis-measure convention: the total mass is
/// area_factor * sum_ij w_i w_j joint_ij = sum of the weights.
inline std::vector<std::vector<double>> mixed_joint_density(
    const std::vector<LevelProcess>& processes, const WeightSequence& w) {
    detail::check_mixture(processes, w);
    const HeatKernel& kernel = processes[0].kernel();
    double T = processes[0].horizon();
    const std::size_t n = kernel.basis().quadrature().size();
    auto G = kernel.grid_matrix(T);
    std::vector<std::vector<double>> joint(n, std::vector<double>(n, 0.0));
    for (std::size_t m = 0; m < processes.size(); ++m) {
        if (w.weights[m] == 0.0) continue;
        auto phi = processes[m].u_grid(0.0);
        auto psi = processes[m].v_grid(T);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                joint[i][j] += w.weights[m] * phi[i] * psi[j];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) joint[i][j] *= G[i][j];
    return joint;
}

inline double mixed_marginal(const std::vector<LevelProcess>& processes, const WeightSequence& w,
                             double t, const std::function<bool(double)>& in_set) {
    detail::check_mixture(processes, w);
    double s = 0.0;
    for (std::size_t m = 0; m < processes.size(); ++m)
        if (w.weights[m] != 0.0) s += w.weights[m] * processes[m].marginal_probability(t, in_set);
    return s;
}

inline double mixed_expectation(const std::vector<LevelProcess>& processes,
                                const WeightSequence& w, const std::function<double(double)>& b,
                                double t) {
    detail::check_mixture(processes, w);
    double s = 0.0;
    for (std::size_t m = 0; m < processes.size(); ++m)
        if (w.weights[m] != 0.0) s += w.weights[m] * processes[m].expectation(b, t);
    return s;
}

/// Total mass of the signed level-m endpoint measure with data
/// phi = f_m, psi = e^{T lambda_m} f_m: sum_n e^{T(lambda_m - lambda_n)}
/// (f_m, f_n)^2 by quadrature, equal to 1 for an orthonormal basis.
inline double lemma1_normalization(const SpectralBasis& basis, std::size_t m, double T) {
    if (m >= basis.level_count())
        throw std::invalid_argument("lemma1_normalization: level outside truncation");
    if (!(T > 0.0)) throw std::invalid_argument("lemma1_normalization: T must be positive");
    const auto& fm = basis.grid_values(m);
    double total = 0.0;
    for (std::size_t n = 0; n < basis.level_count(); ++n) {
        double ip = basis.inner(fm, basis.grid_values(n));
        if (ip == 0.0) continue;
        double log_term = T * (basis.eigenvalue(m) - basis.eigenvalue(n)) +
                          2.0 * std::log(std::abs(ip));
        if (log_term > 700.0)
            throw std::overflow_error("lemma1_normalization: exponent overflow, reduce T or m");
        total += std::exp(log_term);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Stationary (Gibbs-diagonal) process
// ---------------------------------------------------------------------------

inline double stationary_marginal(const HeatKernel& kernel, double T,
                                  const std::function<bool(double)>& in_set) {
    const auto& quad = kernel.basis().quadrature();
    double z = kernel.partition_function(T);
    double s = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i)
        if (in_set(quad.nodes[i])) s += quad.weights[i] * kernel.eval_grid(i, T, i);
    return s / z;
}

inline double stationary_expectation(const HeatKernel& kernel, double T,
                                     const std::function<double(double)>& b) {
    const auto& quad = kernel.basis().quadrature();
    double z = kernel.partition_function(T);
    double s = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i)
        s += quad.weights[i] * b(quad.nodes[i]) * kernel.eval_grid(i, T, i);
    return s / z;
}

/// P(Z_{t_1} in F_1, ..., Z_{t_n} in F_n) of the stationary process: cyclic
/// kernel chain closed by the gap T - (t_n - t_1), normalized by Z(T).
/// Depends on the times only through the gaps, hence time-shift invariant.
inline double stationary_fdd(const HeatKernel& kernel, double T, const std::vector<double>& times,
                             const std::vector<NodeSet>& boxes) {
    if (times.empty() || times.size() != boxes.size())
        throw std::invalid_argument("stationary_fdd: times/boxes mismatch");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] > 0.0 && times[k] < T))
            throw std::invalid_argument("stationary_fdd: times must lie strictly inside (0,T)");
        if (k > 0 && !(times[k] > times[k - 1]))
            throw std::invalid_argument("stationary_fdd: times must be increasing");
    }
    const auto& quad = kernel.basis().quadrature();
    const std::size_t n = quad.size();
    std::vector<char> in(n);
    auto select = [&](const NodeSet& box) {
        std::fill(in.begin(), in.end(), 0);
        for (std::size_t idx : box) in.at(idx) = 1;
    };

    // row vector r over nodes, propagated through the masked kernels
    select(boxes[0]);
    std::vector<std::vector<double>> rows;  // rows[i] = chain from start node i
    // Start from each admissible node i with weight w_i, end back at i.
    // Propagate the full matrix: M = W_1 G(dt_2) W_2 ... W_n G(closing).
    auto G_apply = [&](const std::vector<std::vector<double>>& M, double dt) {
        auto G = kernel.grid_matrix(dt);
        std::vector<std::vector<double>> out(M.size(), std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < M.size(); ++i)
            for (std::size_t k = 0; k < n; ++k) {
                double a = M[i][k];
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) out[i][j] += a * G[k][j];
            }
        return out;
    };
    std::vector<std::vector<double>> M(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) M[i][i] = in[i] ? quad.weights[i] : 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        M = G_apply(M, times[k] - times[k - 1]);
        select(boxes[k]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) M[i][j] = in[j] ? M[i][j] * quad.weights[j] : 0.0;
    }
    double closing = (times.size() == 1) ? T : T - (times.back() - times.front());
    M = G_apply(M, closing);
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) tr += M[i][i];
    return tr / kernel.partition_function(T);
}

/// Endpoint mass matrix of the stationary process on the grid: the discrete
/// form of Z^{-1} g(x,T,y) delta(x-y), i.e. diagonal masses w_i g(x_i,T,x_i)/Z.
inline std::vector<std::vector<double>> gibbs_diagonal_measure(const HeatKernel& kernel,
                                                               double T) {
    const auto& quad = kernel.basis().quadrature();
    const std::size_t n = quad.size();
    double z = kernel.partition_function(T);
    std::vector<std::vector<double>> joint(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        joint[i][i] = quad.weights[i] * kernel.eval_grid(i, T, i) / z;
    return joint;
}

}  // namespace bernstein
