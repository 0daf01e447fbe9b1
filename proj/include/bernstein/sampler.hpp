#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bernstein/heat_kernel.hpp"
#include "bernstein/level_process.hpp"
#include "bernstein/mixture.hpp"
#include "bernstein/stats.hpp"

namespace bernstein {

// ---------------------------------------------------------------------------
// Seed discipline
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Per-path stream id. The contract making batches reproducible:
/// stream_seed(master, path) = splitmix64(master + (path + 1) * 0x9E3779B97F4A7C15),
/// and each path's generator is std::mt19937_64 seeded with its stream id.
/// Uniform deviates are (generator() >> 11) * 2^-53, independent of the
/// standard library's distribution implementations.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t path) {
    return detail::splitmix64(master + (path + 1) * 0x9E3779B97F4A7C15ULL);
}

namespace detail {

struct PathRng {
    std::mt19937_64 gen;
    explicit PathRng(std::uint64_t seed) : gen(seed) {}
    double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
};

/// Cell edges around the quadrature nodes: midpoints between neighbors,
/// clamped to the closed domain.
inline std::vector<double> cell_edges(const QuadratureRule& quad) {
    const std::size_t n = quad.size();
    std::vector<double> edges(n + 1);
    edges[0] = 0.0;
    edges[n] = 1.0;
    for (std::size_t j = 1; j < n; ++j) edges[j] = 0.5 * (quad.nodes[j - 1] + quad.nodes[j]);
    return edges;
}

/// Inverse-CDF draw from nonnegative node masses, linearly interpolated
/// within the node's cell. Tiny negative masses from truncation are clamped.
inline double draw_from_masses(const std::vector<double>& masses,
                               const std::vector<double>& edges, double u) {
    double total = 0.0;
    for (double m : masses) total += std::max(0.0, m);
    if (!(total > 0.0)) throw SingularDensityError("sampler: nonpositive total mass");
    double target = u * total;
    double cum = 0.0;
    for (std::size_t j = 0; j < masses.size(); ++j) {
        double m = std::max(0.0, masses[j]);
        if (cum + m >= target && m > 0.0) {
            double frac = (target - cum) / m;
            return edges[j] + frac * (edges[j + 1] - edges[j]);
        }
        cum += m;
    }
    return edges.back();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trajectory batches
// ---------------------------------------------------------------------------

struct TrajectoryBatch {
    std::vector<double> time_grid;
    std::vector<std::vector<double>> paths;  // paths[p][k] = coordinate at time_grid[k]
    std::uint64_t seed = 0;
    std::string descriptor;
};

/// Paths of a single level process: initial point from the time-grid start
/// marginal, steps from the forward transition, all by inverse CDF on the
/// quadrature grid. Paths are independent given their streams, so the batch
/// is identical however path indices are ordered.
inline TrajectoryBatch sample_level_paths(const LevelProcess& p,
                                          const std::vector<double>& time_grid,
                                          std::size_t n_paths, std::uint64_t seed,
                                          std::string descriptor = "level") {
    if (time_grid.empty()) throw std::invalid_argument("sample_level_paths: empty time grid");
    for (std::size_t k = 0; k < time_grid.size(); ++k) {
        if (time_grid[k] < 0.0 || time_grid[k] > p.horizon())
            throw std::invalid_argument("sample_level_paths: time outside [0,T]");
        if (k > 0) p.kernel().require_time(time_grid[k] - time_grid[k - 1]);
    }
    if (p.is_signed())
        throw PositivityError("sample_level_paths: signed boundary data cannot be sampled");

    const auto& quad = p.basis().quadrature();
    auto edges = detail::cell_edges(quad);
    std::vector<double> init(quad.size());
    {
        auto rho = p.marginal_grid(time_grid[0]);
        for (std::size_t j = 0; j < quad.size(); ++j) init[j] = quad.weights[j] * rho[j];
    }

    TrajectoryBatch batch;
    batch.time_grid = time_grid;
    batch.seed = seed;
    batch.descriptor = std::move(descriptor);
    batch.paths.assign(n_paths, std::vector<double>(time_grid.size()));
    for (std::size_t i = 0; i < n_paths; ++i) {
        detail::PathRng rng(stream_seed(seed, i));
        double x = detail::draw_from_masses(init, edges, rng.uniform());
        batch.paths[i][0] = x;
        for (std::size_t k = 1; k < time_grid.size(); ++k) {
            auto masses = p.forward_masses(x, time_grid[k - 1], time_grid[k]);
            x = detail::draw_from_masses(masses, edges, rng.uniform());
            batch.paths[i][k] = x;
        }
    }
    return batch;
}

/// Mixture sampling: each path first draws its level from the weights, then
/// runs the level sampler on the same per-path stream. The level draw uses a
/// stream derived from the path stream, so degenerate weights reproduce the
/// level batch bit-exactly.
inline TrajectoryBatch sample_mixture_paths(const std::vector<LevelProcess>& processes,
                                            const WeightSequence& w,
                                            const std::vector<double>& time_grid,
                                            std::size_t n_paths, std::uint64_t seed) {
    detail::check_mixture(processes, w);
    double wsum = 0.0;
    for (double pw : w.weights) wsum += pw;
    if (!(wsum > 0.0)) throw std::invalid_argument("sample_mixture_paths: zero total weight");

    // reuse the level sampler's validation and per-step machinery
    for (const auto& p : processes)
        if (p.is_signed())
            throw PositivityError("sample_mixture_paths: signed boundary data cannot be sampled");

    TrajectoryBatch batch;
    batch.time_grid = time_grid;
    batch.seed = seed;
    batch.descriptor = "mixture";
    batch.paths.assign(n_paths, std::vector<double>(time_grid.size()));
    const auto& quad = processes[0].basis().quadrature();
    auto edges = detail::cell_edges(quad);
    for (std::size_t k = 0; k < time_grid.size(); ++k) {
        if (time_grid[k] < 0.0 || time_grid[k] > processes[0].horizon())
            throw std::invalid_argument("sample_mixture_paths: time outside [0,T]");
        if (k > 0) processes[0].kernel().require_time(time_grid[k] - time_grid[k - 1]);
    }
    for (std::size_t i = 0; i < n_paths; ++i) {
        detail::PathRng level_rng(detail::splitmix64(stream_seed(seed, i) ^ 0x6D69787475726573ULL));
        double target = level_rng.uniform() * wsum;
        std::size_t level = w.weights.size() - 1;
        double cum = 0.0;
        for (std::size_t m = 0; m < w.weights.size(); ++m) {
            cum += w.weights[m];
            if (cum >= target) {
                level = m;
                break;
            }
        }
        const LevelProcess& p = processes[level];
        detail::PathRng rng(stream_seed(seed, i));
        std::vector<double> init(quad.size());
        auto rho = p.marginal_grid(time_grid[0]);
        for (std::size_t j = 0; j < quad.size(); ++j) init[j] = quad.weights[j] * rho[j];
        double x = detail::draw_from_masses(init, edges, rng.uniform());
        batch.paths[i][0] = x;
        for (std::size_t k = 1; k < time_grid.size(); ++k) {
            auto masses = p.forward_masses(x, time_grid[k - 1], time_grid[k]);
            x = detail::draw_from_masses(masses, edges, rng.uniform());
            batch.paths[i][k] = x;
        }
    }
    return batch;
}

/// Samples the n-time joint law of the stationary process: x_1 from the
/// marginal g(x,T,x)/Z, later points from the sequential conditionals of the
/// cyclic kernel chain, each conditional normalized on the grid.
inline TrajectoryBatch sample_stationary_pinned(const HeatKernel& kernel, double T,
                                                const std::vector<double>& time_grid,
                                                std::size_t n_paths, std::uint64_t seed) {
    const std::size_t n = time_grid.size();
    if (n < 2) throw std::invalid_argument("sample_stationary_pinned: need at least two times");
    for (std::size_t k = 0; k < n; ++k) {
        if (!(time_grid[k] > 0.0 && time_grid[k] < T))
            throw std::invalid_argument(
                "sample_stationary_pinned: times must lie strictly inside (0,T)");
        if (k > 0) kernel.require_time(time_grid[k] - time_grid[k - 1]);
    }
    const double closing = T - (time_grid.back() - time_grid.front());
    kernel.require_time(closing);

    const SpectralBasis& basis = kernel.basis();
    const auto& quad = basis.quadrature();
    const std::size_t ng = quad.size();
    auto edges = detail::cell_edges(quad);

    std::vector<double> marginal(ng);
    for (std::size_t j = 0; j < ng; ++j)
        marginal[j] = quad.weights[j] * kernel.eval_grid(j, T, j);

    std::vector<std::vector<std::vector<double>>> G(n);  // G[k] for gap k (k >= 2)
    for (std::size_t k = 1; k < n; ++k)
        G[k] = kernel.grid_matrix(time_grid[k] - time_grid[k - 1]);

    std::vector<double> decay_close(kernel.truncation());
    for (std::size_t m = 0; m < kernel.truncation(); ++m)
        decay_close[m] = std::exp(-closing * basis.eigenvalue(m));

    TrajectoryBatch batch;
    batch.time_grid = time_grid;
    batch.seed = seed;
    batch.descriptor = "stationary";
    batch.paths.assign(n_paths, std::vector<double>(n));
    std::vector<std::vector<double>> b(n, std::vector<double>(ng));
    std::vector<double> fx(kernel.truncation());
    std::vector<double> masses(ng);
    for (std::size_t i = 0; i < n_paths; ++i) {
        detail::PathRng rng(stream_seed(seed, i));
        double x1 = detail::draw_from_masses(marginal, edges, rng.uniform());
        batch.paths[i][0] = x1;

        // backward chain vectors toward the closing pin at x1
        for (std::size_t m = 0; m < kernel.truncation(); ++m) fx[m] = basis.eval(m, x1);
        for (std::size_t j = 0; j < ng; ++j) {
            double s = 0.0;
            for (std::size_t m = 0; m < kernel.truncation(); ++m)
                s += decay_close[m] * fx[m] * basis.grid_values(m)[j];
            b[n - 1][j] = s;
        }
        for (std::size_t k = n - 1; k >= 2; --k)
            for (std::size_t j = 0; j < ng; ++j) {
                double s = 0.0;
                for (std::size_t l = 0; l < ng; ++l)
                    s += G[k][j][l] * quad.weights[l] * b[k][l];
                b[k - 1][j] = s;
            }

        double x = x1;
        for (std::size_t k = 1; k < n; ++k) {
            double dt = time_grid[k] - time_grid[k - 1];
            for (std::size_t m = 0; m < kernel.truncation(); ++m)
                fx[m] = std::exp(-dt * basis.eigenvalue(m)) * basis.eval(m, x);
            for (std::size_t j = 0; j < ng; ++j) {
                double g = 0.0;
                for (std::size_t m = 0; m < kernel.truncation(); ++m)
                    g += fx[m] * basis.grid_values(m)[j];
                masses[j] = quad.weights[j] * g * b[k][j];
            }
            x = detail::draw_from_masses(masses, edges, rng.uniform());
            batch.paths[i][k] = x;
        }
    }
    return batch;
}

// ---------------------------------------------------------------------------
// Goodness of fit
// ---------------------------------------------------------------------------

struct FitReport {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    std::size_t bins_requested = 0;
    std::size_t bins_used = 0;  // after merging low-expectation bins
};

namespace detail {

/// Chi-square of observed counts against expected probabilities; bins with
/// expected count below 5 are merged into their right neighbor (last bin
/// merges left).
/// Distributes per-node masses over equal-width bins, each node's mass
/// spread uniformly across its quadrature cell. This is the exact bin law
/// induced by the interpolated inverse-CDF sampler, and agrees with the
/// analytic bin integrals at quadrature resolution.
inline std::vector<double> spread_to_bins(const QuadratureRule& quad,
                                          const std::vector<double>& masses, std::size_t bins) {
    auto edges = cell_edges(quad);
    std::vector<double> out(bins, 0.0);
    for (std::size_t j = 0; j < quad.size(); ++j) {
        double lo = edges[j], hi = edges[j + 1];
        double width = hi - lo;
        if (!(width > 0.0) || masses[j] == 0.0) continue;
        auto b_lo = std::min(bins - 1, static_cast<std::size_t>(lo * bins));
        auto b_hi = std::min(bins - 1, static_cast<std::size_t>(hi * bins));
        for (std::size_t b = b_lo; b <= b_hi; ++b) {
            double seg_lo = std::max(lo, static_cast<double>(b) / bins);
            double seg_hi = std::min(hi, static_cast<double>(b + 1) / bins);
            if (seg_hi > seg_lo) out[b] += masses[j] * (seg_hi - seg_lo) / width;
        }
    }
    return out;
}

inline FitReport chi_square_binned(const std::vector<double>& counts,
                                   const std::vector<double>& expected_prob, double total) {
    std::vector<double> obs, exp;
    double co = 0.0, ce = 0.0;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        co += counts[j];
        ce += expected_prob[j] * total;
        if (ce >= 5.0) {
            obs.push_back(co);
            exp.push_back(ce);
            co = ce = 0.0;
        }
    }
    if (ce > 0.0 || co > 0.0) {
        if (!exp.empty()) {
            obs.back() += co;
            exp.back() += ce;
        } else {
            obs.push_back(co);
            exp.push_back(ce);
        }
    }
    FitReport report;
    report.bins_requested = counts.size();
    report.bins_used = exp.size();
    for (std::size_t j = 0; j < exp.size(); ++j) {
        if (exp[j] <= 0.0) continue;
        double d = obs[j] - exp[j];
        report.statistic += d * d / exp[j];
    }
    report.dof = exp.size() > 1 ? exp.size() - 1 : 0;
    report.p_value = chi_square_pvalue(report.statistic, report.dof);
    return report;
}

}  // namespace detail

/// Chi-square of the batch's time-t coordinates against an analytic marginal
/// density (basis-measure convention), on equal-width coordinate bins.
/// Expected bin probabilities come from the basis quadrature.
inline FitReport goodness_of_fit(const SpectralBasis& basis, const TrajectoryBatch& batch,
                                 const std::function<double(double)>& density_at_t, double t,
                                 std::size_t bins) {
    if (bins == 0) throw std::invalid_argument("goodness_of_fit: bins must be positive");
    std::size_t t_idx = batch.time_grid.size();
    for (std::size_t k = 0; k < batch.time_grid.size(); ++k)
        if (std::abs(batch.time_grid[k] - t) < 1e-12) t_idx = k;
    if (t_idx == batch.time_grid.size())
        throw std::invalid_argument("goodness_of_fit: t not on the batch time grid");

    const auto& quad = basis.quadrature();
    std::vector<double> node_mass(quad.size());
    for (std::size_t i = 0; i < quad.size(); ++i)
        node_mass[i] = quad.weights[i] * density_at_t(quad.nodes[i]);
    auto expected = detail::spread_to_bins(quad, node_mass, bins);
    double mass = 0.0;
    for (double e : expected) mass += e;
    if (!(mass > 0.0)) throw std::invalid_argument("goodness_of_fit: zero expected mass");
    for (double& e : expected) e /= mass;

    std::vector<double> counts(bins, 0.0);
    for (const auto& path : batch.paths) {
        auto b = std::min(bins - 1, static_cast<std::size_t>(path[t_idx] * bins));
        counts[b] += 1.0;
    }
    return detail::chi_square_binned(counts, expected, static_cast<double>(batch.paths.size()));
}

// ---------------------------------------------------------------------------
// Bernstein bridge conditional check
// ---------------------------------------------------------------------------

struct BridgeCellReport {
    std::size_t cell_s = 0;
    std::size_t cell_t = 0;
    std::size_t count = 0;
    bool tested = false;
    FitReport fit;
};

struct BridgeReport {
    std::vector<BridgeCellReport> cells;
    std::size_t tested_cells = 0;
    std::size_t passed_cells = 0;  // p-value > 0.01
    double pass_fraction = 0.0;
};

namespace detail {

/// Equal-mass cell boundaries (coordinates) from node masses.
inline std::vector<double> equal_mass_edges(const QuadratureRule& quad,
                                            const std::vector<double>& masses,
                                            std::size_t cells) {
    auto node_edges = cell_edges(quad);
    double total = 0.0;
    for (double m : masses) total += m;
    std::vector<double> out(cells + 1);
    out[0] = 0.0;
    out[cells] = 1.0;
    double cum = 0.0;
    std::size_t next = 1;
    for (std::size_t j = 0; j < masses.size() && next < cells; ++j) {
        cum += masses[j];
        while (next < cells && cum >= total * static_cast<double>(next) / cells) {
            out[next] = node_edges[j + 1];
            ++next;
        }
    }
    for (; next < cells; ++next) out[next] = 1.0;
    return out;
}

inline std::size_t locate(const std::vector<double>& edges, double x) {
    std::size_t c = 0;
    while (c + 2 < edges.size() && x >= edges[c + 1]) ++c;
    return c;
}

}  // namespace detail

/// Samples the process on {s, r, t}, bins paths by equal-mass endpoint cells
/// at s and t, and tests the conditional law of the midpoint against the
/// quadrature oracle u(x,s) g(x,r-s,z) g(z,t-r,y) v(y,t) integrated over the
/// endpoint cells. Undersampled cells are reported untested.
inline BridgeReport bridge_conditional_check(const LevelProcess& p, double s, double r, double t,
                                             std::size_t n_paths, std::uint64_t seed,
                                             std::size_t cells_per_side = 2,
                                             std::size_t z_bins = 8,
                                             std::size_t min_cell_count = 200) {
    if (!(s < r && r < t)) throw std::invalid_argument("bridge_conditional_check: needs s < r < t");
    auto batch = sample_level_paths(p, {s, r, t}, n_paths, seed, "bridge");

    const SpectralBasis& basis = p.basis();
    const auto& quad = basis.quadrature();
    const std::size_t ng = quad.size();

    auto mass_at = [&](double time) {
        auto rho = p.marginal_grid(time);
        std::vector<double> m(ng);
        for (std::size_t j = 0; j < ng; ++j) m[j] = quad.weights[j] * rho[j];
        return m;
    };
    auto edges_s = detail::equal_mass_edges(quad, mass_at(s), cells_per_side);
    auto edges_t = detail::equal_mass_edges(quad, mass_at(t), cells_per_side);

    auto G1 = p.kernel().grid_matrix(r - s);
    auto G2 = p.kernel().grid_matrix(t - r);
    auto us = p.u_grid(s);
    auto vt = p.v_grid(t);

    BridgeReport report;
    for (std::size_t cs = 0; cs < cells_per_side; ++cs)
        for (std::size_t ct = 0; ct < cells_per_side; ++ct) {
            BridgeCellReport cell;
            cell.cell_s = cs;
            cell.cell_t = ct;

            std::vector<double> counts(z_bins, 0.0);
            for (const auto& path : batch.paths) {
                if (detail::locate(edges_s, path[0]) != cs) continue;
                if (detail::locate(edges_t, path[2]) != ct) continue;
                ++cell.count;
                auto b = std::min(z_bins - 1, static_cast<std::size_t>(path[1] * z_bins));
                counts[b] += 1.0;
            }
            if (cell.count >= min_cell_count) {
                // oracle conditional mass of Z_r per node, endpoint cells integrated out
                std::vector<double> left(ng, 0.0), right(ng, 0.0);
                for (std::size_t x = 0; x < ng; ++x) {
                    if (detail::locate(edges_s, quad.nodes[x]) != cs) continue;
                    for (std::size_t j = 0; j < ng; ++j)
                        left[j] += quad.weights[x] * us[x] * G1[x][j];
                }
                for (std::size_t y = 0; y < ng; ++y) {
                    if (detail::locate(edges_t, quad.nodes[y]) != ct) continue;
                    for (std::size_t j = 0; j < ng; ++j)
                        right[j] += quad.weights[y] * G2[j][y] * vt[y];
                }
                std::vector<double> node_mass(ng);
                for (std::size_t j = 0; j < ng; ++j)
                    node_mass[j] = quad.weights[j] * left[j] * right[j];
                auto expected = detail::spread_to_bins(quad, node_mass, z_bins);
                double mass = 0.0;
                for (double e : expected) mass += e;
                for (double& e : expected) e /= mass;
                cell.fit = detail::chi_square_binned(counts, expected,
                                                     static_cast<double>(cell.count));
                cell.tested = true;
                ++report.tested_cells;
                if (cell.fit.p_value > 0.01) ++report.passed_cells;
            }
            report.cells.push_back(cell);
        }
    report.pass_fraction = report.tested_cells
                               ? static_cast<double>(report.passed_cells) /
                                     static_cast<double>(report.tested_cells)
                               : 0.0;
    return report;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline void write_trajectory_csv(std::ostream& out, const TrajectoryBatch& batch) {
    out << "path,time,coord\n";
    std::ostringstream line;
    line.setf(std::ios::scientific);
    line.precision(16);
    for (std::size_t i = 0; i < batch.paths.size(); ++i)
        for (std::size_t k = 0; k < batch.time_grid.size(); ++k) {
            line.str("");
            line << i << ',' << batch.time_grid[k] << ',' << batch.paths[i][k] << '\n';
            out << line.str();
        }
}

}  // namespace bernstein
