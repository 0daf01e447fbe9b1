#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include "bernstein/heat_kernel.hpp"
#include "bernstein/spectral_basis.hpp"

namespace bernstein {

/// Signed boundary data fed to an operation that requires positive densities.
struct PositivityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Division by a vanishing forward/backward solution or heat-kernel value.
struct SingularDensityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Boundary datum for one hierarchy level: either a pointwise evaluator or a
/// ready eigenbasis coefficient vector.
class BoundarySpec {
public:
    template <typename F, typename = std::enable_if_t<std::is_invocable_r_v<double, F, double>>>
    BoundarySpec(F fn) : fn_(std::move(fn)) {}
    BoundarySpec(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}

    std::vector<double> to_coeffs(const SpectralBasis& basis, std::size_t count) const {
        if (fn_) return basis.project(fn_, count);
        std::vector<double> c = *coeffs_;
        c.resize(count, 0.0);
        return c;
    }

    /// Exact pointwise values on the quadrature grid; falls back to the
    /// eigenbasis synthesis when only coefficients were supplied.
    std::vector<double> grid_values(const SpectralBasis& basis,
                                    const std::vector<double>& coeffs) const {
        const auto& quad = basis.quadrature();
        std::vector<double> v(quad.size());
        for (std::size_t i = 0; i < quad.size(); ++i)
            v[i] = fn_ ? fn_(quad.nodes[i]) : basis.synthesize(coeffs, quad.nodes[i]);
        return v;
    }

    const std::function<double(double)>& evaluator() const { return fn_; }

private:
    std::function<double(double)> fn_;
    std::optional<std::vector<double>> coeffs_;
};

/// Initial/final data of one level, held as eigenbasis coefficients plus the
/// exact endpoint values on the quadrature grid.
struct BoundaryData {
    std::size_t level = 0;
    std::vector<double> phi0;    // coefficients of phi_{0,m}
    std::vector<double> psiT;    // coefficients of psi_{T,m}
    double horizon = 0.0;
    bool is_signed = false;      // positivity not certified on the grid
    std::vector<double> phi_grid;
    std::vector<double> psi_grid;
    std::function<double(double)> phi_fn;
    std::function<double(double)> psi_fn;
};

/// Markovian Bernstein process of one spectral level: forward solution
/// u(x,t) = sum_n phi_n e^{-t lambda_n} f_n(x) and backward solution
/// v(x,t) = sum_n psi_n e^{-(T-t) lambda_n} f_n(x). Exact endpoint data are
/// used at t = 0 and t = T, so evaluation there never touches the kernel.
/// Immutable after construction; all operations are pure.
class LevelProcess {
public:
    LevelProcess(HeatKernel kernel, BoundaryData data)
        : kernel_(std::move(kernel)), data_(std::move(data)) {}

    const SpectralBasis& basis() const { return kernel_.basis(); }
    const HeatKernel& kernel() const { return kernel_; }
    const BoundaryData& data() const { return data_; }
    double horizon() const { return data_.horizon; }
    bool is_signed() const { return data_.is_signed; }

    std::vector<double> u_coeffs(double t) const {
        check_time(t);
        std::vector<double> c(data_.phi0.size());
        for (std::size_t n = 0; n < c.size(); ++n)
            c[n] = data_.phi0[n] * std::exp(-t * basis().eigenvalue(n));
        return c;
    }

    std::vector<double> v_coeffs(double t) const {
        check_time(t);
        std::vector<double> c(data_.psiT.size());
        for (std::size_t n = 0; n < c.size(); ++n)
            c[n] = data_.psiT[n] * std::exp(-(data_.horizon - t) * basis().eigenvalue(n));
        return c;
    }

    double u(double x, double t) const {
        if (t == 0.0 && data_.phi_fn) return data_.phi_fn(x);
        return basis().synthesize(u_coeffs(t), x);
    }

    double v(double x, double t) const {
        if (t == data_.horizon && data_.psi_fn) return data_.psi_fn(x);
        return basis().synthesize(v_coeffs(t), x);
    }

    std::vector<double> u_grid(double t) const {
        if (t == 0.0) return data_.phi_grid;
        return synth_grid(u_coeffs(t));
    }

    std::vector<double> v_grid(double t) const {
        if (t == data_.horizon) return data_.psi_grid;
        return synth_grid(v_coeffs(t));
    }

    /// (u(.,t), v(.,t)) with the area convention; conserved and equal to 1
    /// for normalized data.
    double conservation(double t) const {
        return basis().area_factor() * basis().inner(u_grid(t), v_grid(t));
    }

    /// Density of the forward Markov transition function,
    /// g(x,t-s,y) v(y,t) / v(x,s); a transition density in y with respect to
    /// the basis measure.
    double forward_density(double x, double s, double y, double t) const {
        check_pair(s, t);
        double vs = v(x, s);
        if (vs <= 0.0) throw SingularDensityError("forward_density: v(x,s) <= 0 (signed data)");
        return kernel_.eval(x, t - s, y) * v(y, t) / vs;
    }

    /// Density of the backward Markov transition function,
    /// g(x,t-s,y) u(y,s) / u(x,t).
    double backward_density(double x, double t, double y, double s) const {
        check_pair(s, t);
        double ut = u(x, t);
        if (ut <= 0.0) throw SingularDensityError("backward_density: u(x,t) <= 0 (signed data)");
        return kernel_.eval(x, t - s, y) * u(y, s) / ut;
    }

    /// Forward transition masses from x at time s to the quadrature nodes at
    /// time t (weights folded in). Used by the path sampler; sums to 1.
    std::vector<double> forward_masses(double x, double s, double t) const {
        check_pair(s, t);
        double vs = v(x, s);
        if (vs <= 0.0) throw SingularDensityError("forward_masses: v(x,s) <= 0 (signed data)");
        const auto& quad = basis().quadrature();
        std::vector<double> fx(kernel_.truncation());
        for (std::size_t m = 0; m < fx.size(); ++m)
            fx[m] = std::exp(-(t - s) * basis().eigenvalue(m)) * basis().eval(m, x);
        std::vector<double> vt = v_grid(t);
        std::vector<double> mass(quad.size(), 0.0);
        for (std::size_t m = 0; m < fx.size(); ++m) {
            const auto& fm = basis().grid_values(m);
            for (std::size_t j = 0; j < quad.size(); ++j) mass[j] += fx[m] * fm[j];
        }
        for (std::size_t j = 0; j < quad.size(); ++j) mass[j] *= quad.weights[j] * vt[j] / vs;
        return mass;
    }

    /// Time-t marginal density x -> u(x,t) v(x,t) (with respect to planar
    /// Lebesgue measure after division by the area factor; its area integral
    /// is 1).
    std::function<double(double)> marginal_density(double t) const {
        check_time(t);
        return [this, t](double x) { return u(x, t) * v(x, t); };
    }

    std::vector<double> marginal_grid(double t) const {
        auto ug = u_grid(t);
        auto vg = v_grid(t);
        for (std::size_t i = 0; i < ug.size(); ++i) ug[i] *= vg[i];
        return ug;
    }

    /// P(Z_t in F) for F given as a quadrature-node predicate; area integral
    /// of u v over F.
    double marginal_probability(double t, const std::function<bool(double)>& in_set) const {
        const auto& quad = basis().quadrature();
        auto rho = marginal_grid(t);
        double s = 0.0;
        for (std::size_t i = 0; i < quad.size(); ++i)
            if (in_set(quad.nodes[i])) s += quad.weights[i] * rho[i];
        return basis().area_factor() * s;
    }

    /// E(b(Z_t)): area integral of b u v.
    double expectation(const std::function<double(double)>& b, double t) const {
        const auto& quad = basis().quadrature();
        auto rho = marginal_grid(t);
        double s = 0.0;
        for (std::size_t i = 0; i < quad.size(); ++i)
            s += quad.weights[i] * b(quad.nodes[i]) * rho[i];
        return basis().area_factor() * s;
    }

    double two_sided(double x, double t, double z, double r, double y, double s) const;

private:
    void check_time(double t) const {
        if (t < 0.0 || t > data_.horizon)
            throw std::invalid_argument("LevelProcess: time outside [0, T]");
    }
    void check_pair(double s, double t) const {
        check_time(s);
        check_time(t);
        if (!(s < t)) throw std::invalid_argument("LevelProcess: requires s < t");
    }
    std::vector<double> synth_grid(const std::vector<double>& coeffs) const {
        const auto& quad = basis().quadrature();
        std::vector<double> out(quad.size(), 0.0);
        for (std::size_t m = 0; m < coeffs.size(); ++m) {
            const auto& fm = basis().grid_values(m);
            for (std::size_t i = 0; i < quad.size(); ++i) out[i] += coeffs[m] * fm[i];
        }
        return out;
    }

    HeatKernel kernel_;
    BoundaryData data_;
};

/// Builds the level process from boundary specs; coefficients by quadrature
/// projection. Data whose normalization integral deviates from 1 by more
/// than 1e-4 are only accepted with allow_unnormalized.
inline LevelProcess make_level_process(const HeatKernel& kernel, std::size_t level,
                                       const BoundarySpec& phi0_spec,
                                       const BoundarySpec& psiT_spec, double T,
                                       bool allow_unnormalized = false) {
    const SpectralBasis& basis = kernel.basis();
    kernel.require_time(T);
    BoundaryData data;
    data.level = level;
    data.horizon = T;
    data.phi0 = phi0_spec.to_coeffs(basis, kernel.truncation());
    data.psiT = psiT_spec.to_coeffs(basis, kernel.truncation());
    data.phi_grid = phi0_spec.grid_values(basis, data.phi0);
    data.psi_grid = psiT_spec.grid_values(basis, data.psiT);
    data.phi_fn = phi0_spec.evaluator();
    data.psi_fn = psiT_spec.evaluator();

    data.is_signed = false;
    for (double v : data.phi_grid)
        if (v <= 0.0) data.is_signed = true;
    for (double v : data.psi_grid)
        if (v <= 0.0) data.is_signed = true;

    double norm = 0.0;
    for (std::size_t n = 0; n < data.phi0.size(); ++n)
        norm += std::exp(-T * basis.eigenvalue(n)) * data.phi0[n] * data.psiT[n];
    norm *= basis.area_factor();
    if (std::abs(norm - 1.0) > 1e-4 && !allow_unnormalized) {
        std::ostringstream msg;
        msg << "make_level_process: boundary data normalization is " << norm
            << " (deviation > 1e-4); pass allow_unnormalized to construct anyway";
        throw std::invalid_argument(msg.str());
    }
    return LevelProcess(kernel, std::move(data));
}

/// Two-sided transition density q(x,t; z,r; y,s) =
/// g(x,t-r,z) g(z,r-s,y) / g(x,t-s,y); integrates to 1 in z with respect to
/// the basis measure.
inline double two_sided_density(const HeatKernel& kernel, double x, double t, double z, double r,
                                double y, double s) {
    if (!(s < r && r < t)) throw std::invalid_argument("two_sided_density: needs s < r < t");
    double denom = kernel.eval(x, t - s, y);
    if (std::abs(denom) < 1e-300)
        throw SingularDensityError("two_sided_density: pinning pair (x,y) has vanishing kernel");
    return kernel.eval(x, t - r, z) * kernel.eval(z, r - s, y) / denom;
}

inline double LevelProcess::two_sided(double x, double t, double z, double r, double y,
                                      double s) const {
    check_time(s);
    check_time(t);
    return two_sided_density(kernel_, x, t, z, r, y, s);
}

// ---------------------------------------------------------------------------
// Finite-dimensional distributions from an endpoint measure
// ---------------------------------------------------------------------------

/// Grid subset on the quadrature nodes, as node indices.
using NodeSet = std::vector<std::size_t>;

inline NodeSet node_set(const SpectralBasis& basis, const std::function<bool(double)>& pred) {
    NodeSet set;
    const auto& quad = basis.quadrature();
    for (std::size_t i = 0; i < quad.size(); ++i)
        if (pred(quad.nodes[i])) set.push_back(i);
    return set;
}

inline NodeSet all_nodes(const SpectralBasis& basis) {
    NodeSet set(basis.quadrature().size());
    for (std::size_t i = 0; i < set.size(); ++i) set[i] = i;
    return set;
}

/// P(Z_{t_1} in F_1, ..., Z_{t_n} in F_n) for the process generated by a
/// discrete endpoint measure (masses on grid x grid): the endpoint pairs are
/// weighted by joint/g(x,T,y) and chained through the boxes with quadrature
/// weights.
inline double fdd_from_measure(const HeatKernel& kernel, double T,
                               const std::vector<std::vector<double>>& joint,
                               const std::vector<double>& times,
                               const std::vector<NodeSet>& boxes) {
    const SpectralBasis& basis = kernel.basis();
    const auto& quad = basis.quadrature();
    const std::size_t n = quad.size();
    if (joint.size() != n) throw std::invalid_argument("fdd_from_measure: joint size mismatch");
    if (times.empty() || times.size() != boxes.size())
        throw std::invalid_argument("fdd_from_measure: times/boxes mismatch");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] > 0.0 && times[k] < T))
            throw std::invalid_argument("fdd_from_measure: times must lie strictly inside (0,T)");
        if (k > 0 && !(times[k] > times[k - 1]))
            throw std::invalid_argument("fdd_from_measure: times must be increasing");
    }
    double mass = 0.0;
    for (const auto& row : joint)
        for (double v : row) mass += v;
    if (std::abs(mass - 1.0) > 1e-6)
        throw std::invalid_argument("fdd_from_measure: joint measure must sum to 1");

    // chain = G(t_1) D_1 G(t_2 - t_1) D_2 ... D_k G(T - t_k), D_l masking box
    // l with the quadrature weights.
    auto matmul = [n](const std::vector<std::vector<double>>& A,
                      const std::vector<std::vector<double>>& B) {
        std::vector<std::vector<double>> C(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                double a = A[i][k];
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) C[i][j] += a * B[k][j];
            }
        return C;
    };
    auto mask = [&](std::vector<std::vector<double>> M, const NodeSet& box) {
        std::vector<bool> in(n, false);
        for (std::size_t idx : box) in.at(idx) = true;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) M[i][j] = in[j] ? M[i][j] * quad.weights[j] : 0.0;
        return M;
    };

    std::vector<std::vector<double>> chain = mask(kernel.grid_matrix(times[0]), boxes[0]);
    for (std::size_t k = 1; k < times.size(); ++k)
        chain = matmul(chain, mask(kernel.grid_matrix(times[k] - times[k - 1]), boxes[k]));
    chain = matmul(chain, kernel.grid_matrix(T - times.back()));

    double p = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (joint[i][j] == 0.0) continue;
            double g = kernel.eval_grid(i, T, j);
            if (std::abs(g) < 1e-300)
                throw SingularDensityError(
                    "fdd_from_measure: endpoint pair with vanishing kernel weight");
            p += joint[i][j] / g * chain[i][j];
        }
    return p;
}

// ---------------------------------------------------------------------------
// Markov product-form criterion
// ---------------------------------------------------------------------------

struct ProductFormCertificate {
    bool is_product = false;
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    std::vector<double> nu0;  // rank-1 left factor (valid when is_product)
    std::vector<double> nuT;  // rank-1 right factor
};

namespace detail {

/// Top-two singular values (and the leading pair of singular vectors) by
/// power iteration with one deflation step. Deterministic start vector.
inline void top_two_singular(const std::vector<std::vector<double>>& A, double& s1, double& s2,
                             std::vector<double>& u1, std::vector<double>& v1) {
    const std::size_t nr = A.size(), nc = A[0].size();
    auto apply = [&](const std::vector<double>& v, const std::vector<double>* defl_u,
                     const std::vector<double>* defl_v, double defl_s) {
        std::vector<double> av(nr, 0.0);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j) av[i] += A[i][j] * v[j];
        if (defl_u) {
            double proj = 0.0;
            for (std::size_t j = 0; j < nc; ++j) proj += (*defl_v)[j] * v[j];
            for (std::size_t i = 0; i < nr; ++i) av[i] -= defl_s * (*defl_u)[i] * proj;
        }
        std::vector<double> atav(nc, 0.0);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j) atav[j] += A[i][j] * av[i];
        if (defl_u) {
            double proj = 0.0;
            for (std::size_t i = 0; i < nr; ++i) proj += (*defl_u)[i] * av[i];
            for (std::size_t j = 0; j < nc; ++j) atav[j] -= defl_s * (*defl_v)[j] * proj;
        }
        return std::make_pair(av, atav);
    };
    auto norm = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    auto iterate = [&](const std::vector<double>* du, const std::vector<double>* dv, double ds,
                       std::vector<double>& u_out, std::vector<double>& v_out) {
        std::vector<double> v(nc);
        for (std::size_t j = 0; j < nc; ++j) v[j] = 1.0 + 0.01 * static_cast<double>(j % 7);
        double sigma = 0.0;
        for (int it = 0; it < 1000; ++it) {
            auto [av, atav] = apply(v, du, dv, ds);
            double nv = norm(atav);
            if (nv == 0.0) { sigma = 0.0; break; }
            for (double& x : atav) x /= nv;
            double new_sigma = std::sqrt(nv / 1.0);
            // nv approximates sigma^2 * |v| with |v| = 1
            if (it > 5 && std::abs(new_sigma - sigma) <= 1e-13 * std::max(1.0, sigma)) {
                sigma = new_sigma;
                v = atav;
                break;
            }
            sigma = new_sigma;
            v = atav;
        }
        auto [av, atav] = apply(v, du, dv, ds);
        (void)atav;
        double na = norm(av);
        u_out.assign(nr, 0.0);
        if (na > 0.0)
            for (std::size_t i = 0; i < nr; ++i) u_out[i] = av[i] / na;
        v_out = v;
        return na;  // |A v| with |v| = 1, the singular value estimate
    };
    std::vector<double> u2, v2;
    s1 = iterate(nullptr, nullptr, 0.0, u1, v1);
    s2 = iterate(&u1, &v1, s1, u2, v2);
}

}  // namespace detail

/// Product-form (Markov) criterion: the ratio matrix joint_density / g(x,T,y)
/// is rank-1 within tol (second singular value <= tol * first). The
/// certificate carries the rank-1 factors when the test passes.
inline ProductFormCertificate is_product_form(const HeatKernel& kernel, double T,
                                              const std::vector<std::vector<double>>& joint_density,
                                              double tol = 1e-6) {
    const std::size_t n = kernel.basis().quadrature().size();
    if (joint_density.size() != n)
        throw std::invalid_argument("is_product_form: grid matrix size mismatch");
    double total = 0.0;
    std::vector<std::vector<double>> ratio(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (joint_density[i][j] < 0.0)
                throw std::invalid_argument("is_product_form: joint density must be nonnegative");
            total += joint_density[i][j];
            ratio[i][j] = joint_density[i][j] / kernel.eval_grid(i, T, j);
        }
    if (total == 0.0) throw std::invalid_argument("is_product_form: zero matrix");

    ProductFormCertificate cert;
    std::vector<double> u1, v1;
    detail::top_two_singular(ratio, cert.sigma1, cert.sigma2, u1, v1);
    cert.is_product = cert.sigma2 <= tol * cert.sigma1;
    if (cert.is_product) {
        double s = std::sqrt(cert.sigma1);
        cert.nu0.resize(n);
        cert.nuT.resize(n);
        for (std::size_t i = 0; i < n; ++i) cert.nu0[i] = s * u1[i];
        for (std::size_t j = 0; j < n; ++j) cert.nuT[j] = s * v1[j];
    }
    return cert;
}

// ---------------------------------------------------------------------------
// Schroedinger system (iterative proportional fitting)
// ---------------------------------------------------------------------------

struct SchroedingerSolution {
    std::vector<double> phi0;
    std::vector<double> psiT;
    std::size_t iterations = 0;
    double residual0 = 0.0;
    double residualT = 0.0;
    bool converged = false;
};

/// Solves the marginal-matching system phi (G psi) = mu0, psi (G^T phi) = muT
/// by alternating proportional fitting on the quadrature grid. mu0 and muT
/// are densities with respect to planar Lebesgue measure, strictly positive
/// and of unit area integral. The scalar gauge is fixed by the area integral
/// of phi against mu... the basis measure being 1.
inline SchroedingerSolution schroedinger_solve(const HeatKernel& kernel, double T,
                                               const std::vector<double>& mu0,
                                               const std::vector<double>& muT, double tol,
                                               std::size_t max_iter) {
    const SpectralBasis& basis = kernel.basis();
    const auto& quad = basis.quadrature();
    const std::size_t n = quad.size();
    if (mu0.size() != n || muT.size() != n)
        throw std::invalid_argument("schroedinger_solve: marginal size mismatch");
    const double area = basis.area_factor();
    auto check_marginal = [&](const std::vector<double>& mu, const char* name) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(mu[i] > 0.0))
                throw PositivityError(std::string("schroedinger_solve: ") + name +
                                      " must be strictly positive on the grid");
            total += quad.weights[i] * mu[i];
        }
        total *= area;
        if (std::abs(total - 1.0) > 1e-6)
            throw std::invalid_argument(std::string("schroedinger_solve: ") + name +
                                        " must integrate to 1");
    };
    check_marginal(mu0, "mu0");
    check_marginal(muT, "muT");

    auto G = kernel.grid_matrix(T);
    for (const auto& row : G)
        for (double g : row)
            if (!(g > 0.0))
                throw PositivityError("schroedinger_solve: kernel must be strictly positive");

    auto apply = [&](const std::vector<double>& v) {  // area * G W v (G symmetric)
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += G[i][j] * quad.weights[j] * v[j];
            out[i] = area * s;
        }
        return out;
    };

    SchroedingerSolution sol;
    sol.phi0.assign(n, 1.0);
    sol.psiT.assign(n, 1.0);
    for (sol.iterations = 1; sol.iterations <= max_iter; ++sol.iterations) {
        auto gpsi = apply(sol.psiT);
        for (std::size_t i = 0; i < n; ++i) {
            if (!(gpsi[i] > 0.0)) throw PositivityError("schroedinger_solve: zero denominator");
            sol.phi0[i] = mu0[i] / gpsi[i];
        }
        auto gphi = apply(sol.phi0);
        for (std::size_t i = 0; i < n; ++i) {
            if (!(gphi[i] > 0.0)) throw PositivityError("schroedinger_solve: zero denominator");
            sol.psiT[i] = muT[i] / gphi[i];
        }
        gpsi = apply(sol.psiT);
        sol.residual0 = 0.0;
        sol.residualT = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            sol.residual0 = std::max(sol.residual0, std::abs(sol.phi0[i] * gpsi[i] - mu0[i]));
        gphi = apply(sol.phi0);
        for (std::size_t i = 0; i < n; ++i)
            sol.residualT = std::max(sol.residualT, std::abs(sol.psiT[i] * gphi[i] - muT[i]));
        if (sol.residual0 < tol && sol.residualT < tol) {
            sol.converged = true;
            break;
        }
    }
    if (sol.iterations > max_iter) sol.iterations = max_iter;

    // gauge: area integral of phi under the basis measure equals 1
    double phi_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) phi_mass += quad.weights[i] * sol.phi0[i];
    phi_mass *= area;
    if (phi_mass > 0.0) {
        for (double& x : sol.phi0) x /= phi_mass;
        for (double& x : sol.psiT) x *= phi_mass;
    }
    return sol;
}

}  // namespace bernstein
