#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "bernstein/level_process.hpp"
#include "bernstein/mixture.hpp"
#include "bernstein/spectral_basis.hpp"

namespace bernstein {

enum class Purity { pure, mixed };

inline const char* purity_name(Purity p) { return p == Purity::pure ? "pure" : "mixed"; }

/// Trace-class statistical operator, diagonal in the eigenbasis: R f_m =
/// p_m f_m. Inner products here are over the full domain, i.e. the basis
/// measure scaled by the area factor.
class StatOperator {
public:
    StatOperator(const SpectralBasis& basis, WeightSequence w)
        : basis_(&basis), w_(std::move(w)) {
        if (w_.weights.size() > basis.level_count())
            throw std::invalid_argument("StatOperator: more weights than basis levels");
    }

    const SpectralBasis& basis() const { return *basis_; }
    const WeightSequence& weights() const { return w_; }

    /// Component-wise action on eigenbasis coefficients.
    std::vector<double> apply(const std::vector<double>& coeffs) const {
        if (coeffs.size() > w_.weights.size())
            throw std::invalid_argument("StatOperator::apply: coefficient vector too long");
        std::vector<double> out(coeffs.size());
        for (std::size_t m = 0; m < coeffs.size(); ++m) out[m] = w_.weights[m] * coeffs[m];
        return out;
    }

    double trace() const {
        double s = 0.0;
        for (double p : w_.weights) s += p;
        return s;
    }

    double trace_square() const {
        double s = 0.0;
        for (double p : w_.weights) s += p * p;
        return s;
    }

    /// Pure iff Tr R^2 >= 1 - 1e-12; requires the trace itself near 1.
    Purity classify() const {
        if (std::abs(trace() - 1.0) > 1e-8)
            throw std::invalid_argument(
                "StatOperator::classify: trace deficit too large to classify");
        return trace_square() >= 1.0 - 1e-12 ? Purity::pure : Purity::mixed;
    }

    /// Tr(R B) for the multiplication operator B by b: sum_m p_m (b f_m, f_m).
    double trace_RB(const std::function<double(double)>& b) const {
        const auto& quad = basis_->quadrature();
        std::vector<double> bg(quad.size());
        for (std::size_t i = 0; i < quad.size(); ++i) bg[i] = b(quad.nodes[i]);
        double s = 0.0;
        for (std::size_t m = 0; m < w_.weights.size(); ++m) {
            if (w_.weights[m] == 0.0) continue;
            const auto& fm = basis_->grid_values(m);
            double ip = 0.0;
            for (std::size_t i = 0; i < quad.size(); ++i)
                ip += quad.weights[i] * bg[i] * fm[i] * fm[i];
            s += w_.weights[m] * ip;
        }
        return s;
    }

private:
    const SpectralBasis* basis_;
    WeightSequence w_;
};

namespace detail {

/// Full-domain inner product of two coefficient vectors: area * dot.
inline double inner_domain(const SpectralBasis& basis, const std::vector<double>& a,
                           const std::vector<double>& b) {
    double s = 0.0;
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return basis.area_factor() * s;
}

}  // namespace detail

/// The default biorthonormal boundary pair for level m: phi = f_m and
/// psi = e^{T lambda_m} f_m, both scaled by 1/sqrt(area) so that
/// (u_m(.,t), v_n(.,t)) = delta_{mn} in the full-domain inner product.
inline LevelProcess default_biorthonormal_process(const HeatKernel& kernel, std::size_t m,
                                                  double T) {
    const SpectralBasis& basis = kernel.basis();
    if (m >= kernel.truncation())
        throw std::invalid_argument("default_biorthonormal_process: level outside truncation");
    double s = 1.0 / std::sqrt(basis.area_factor());
    std::vector<double> phi(kernel.truncation(), 0.0), psi(kernel.truncation(), 0.0);
    phi[m] = s;
    psi[m] = s * std::exp(T * basis.eigenvalue(m));
    // f_m changes sign for m >= 1, so these data are signed by construction
    return make_level_process(kernel, m, BoundarySpec(phi), BoundarySpec(psi), T);
}

/// Time-dependent statistical operator R(t) f = sum_m p_m (f, u_m(.,t))
/// v_m(.,t), stored as the low-rank coefficient factors at time t.
class TimeDepStatOperator {
public:
    TimeDepStatOperator(const SpectralBasis& basis, WeightSequence w,
                        std::vector<std::vector<double>> u_cols,
                        std::vector<std::vector<double>> v_cols, double time, double horizon)
        : basis_(&basis),
          w_(std::move(w)),
          u_cols_(std::move(u_cols)),
          v_cols_(std::move(v_cols)),
          time_(time),
          horizon_(horizon) {}

    const SpectralBasis& basis() const { return *basis_; }
    const WeightSequence& weights() const { return w_; }
    double time() const { return time_; }
    double horizon() const { return horizon_; }
    const std::vector<double>& u_coeffs(std::size_t m) const { return u_cols_.at(m); }
    const std::vector<double>& v_coeffs(std::size_t m) const { return v_cols_.at(m); }

    /// Action on eigenbasis coefficients.
    std::vector<double> apply(const std::vector<double>& coeffs) const {
        std::size_t dim = 0;
        for (const auto& c : v_cols_) dim = std::max(dim, c.size());
        dim = std::max(dim, coeffs.size());
        std::vector<double> out(dim, 0.0);
        for (std::size_t m = 0; m < w_.weights.size(); ++m) {
            if (w_.weights[m] == 0.0) continue;
            double ip = detail::inner_domain(*basis_, coeffs, u_cols_[m]);
            for (std::size_t k = 0; k < v_cols_[m].size(); ++k)
                out[k] += w_.weights[m] * ip * v_cols_[m][k];
        }
        return out;
    }

    /// Adjoint action: the roles of u and v swap.
    std::vector<double> apply_adjoint(const std::vector<double>& coeffs) const {
        std::size_t dim = 0;
        for (const auto& c : u_cols_) dim = std::max(dim, c.size());
        dim = std::max(dim, coeffs.size());
        std::vector<double> out(dim, 0.0);
        for (std::size_t m = 0; m < w_.weights.size(); ++m) {
            if (w_.weights[m] == 0.0) continue;
            double ip = detail::inner_domain(*basis_, coeffs, v_cols_[m]);
            for (std::size_t k = 0; k < u_cols_[m].size(); ++k)
                out[k] += w_.weights[m] * ip * u_cols_[m][k];
        }
        return out;
    }

    double trace() const {
        double s = 0.0;
        for (std::size_t m = 0; m < w_.weights.size(); ++m)
            s += w_.weights[m] * detail::inner_domain(*basis_, u_cols_[m], v_cols_[m]);
        return s;
    }

    /// Tr(R(t) B) for multiplication by b: sum_m p_m (b u_m(.,t), v_m(.,t)),
    /// the multiplication entering through the quadrature Gram matrix.
    double trace_RB(const std::function<double(double)>& b) const {
        const auto& quad = basis_->quadrature();
        std::vector<double> bg(quad.size());
        for (std::size_t i = 0; i < quad.size(); ++i) bg[i] = b(quad.nodes[i]);
        double s = 0.0;
        for (std::size_t m = 0; m < w_.weights.size(); ++m) {
            if (w_.weights[m] == 0.0) continue;
            auto ug = synth(u_cols_[m]);
            auto vg = synth(v_cols_[m]);
            double ip = 0.0;
            for (std::size_t i = 0; i < quad.size(); ++i)
                ip += quad.weights[i] * bg[i] * ug[i] * vg[i];
            s += w_.weights[m] * basis_->area_factor() * ip;
        }
        return s;
    }

private:
    std::vector<double> synth(const std::vector<double>& coeffs) const {
        const auto& quad = basis_->quadrature();
        std::vector<double> out(quad.size(), 0.0);
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            const auto& fk = basis_->grid_values(k);
            for (std::size_t i = 0; i < quad.size(); ++i) out[i] += coeffs[k] * fk[i];
        }
        return out;
    }

    const SpectralBasis* basis_;
    WeightSequence w_;
    std::vector<std::vector<double>> u_cols_;
    std::vector<std::vector<double>> v_cols_;
    double time_;
    double horizon_;
};

/// Assembles R(t) from level processes; the (u_m(.,t), v_n(.,t)) system must
/// be biorthonormal within 1e-6 or construction is refused.
inline TimeDepStatOperator make_timedep(const std::vector<LevelProcess>& processes,
                                        const WeightSequence& w, double t) {
    detail::check_mixture(processes, w);
    const SpectralBasis& basis = processes[0].basis();
    double T = processes[0].horizon();
    if (t < 0.0 || t > T) throw std::invalid_argument("make_timedep: t outside [0,T]");
    std::vector<std::vector<double>> u_cols, v_cols;
    u_cols.reserve(processes.size());
    v_cols.reserve(processes.size());
    for (const auto& p : processes) {
        u_cols.push_back(p.u_coeffs(t));
        v_cols.push_back(p.v_coeffs(t));
    }
    for (std::size_t m = 0; m < processes.size(); ++m)
        for (std::size_t n = 0; n < processes.size(); ++n) {
            double ip = detail::inner_domain(basis, u_cols[m], v_cols[n]);
            double target = (m == n) ? 1.0 : 0.0;
            if (std::abs(ip - target) > 1e-6)
                throw std::invalid_argument(
                    "make_timedep: boundary data are not biorthonormal within 1e-6");
        }
    return TimeDepStatOperator(basis, w, std::move(u_cols), std::move(v_cols), t, T);
}

/// Oblique projection P_m(t): f -> (f, u_m(.,t)) v_m(.,t). Idempotent for
/// biorthonormal data; orthogonal in the default (eigenfunction) case.
class ObliqueProjection {
public:
    ObliqueProjection(const SpectralBasis& basis, std::vector<double> u, std::vector<double> v)
        : basis_(&basis), u_(std::move(u)), v_(std::move(v)) {}

    std::vector<double> apply(const std::vector<double>& coeffs) const {
        double ip = detail::inner_domain(*basis_, coeffs, u_);
        std::vector<double> out(v_.size());
        for (std::size_t k = 0; k < v_.size(); ++k) out[k] = ip * v_[k];
        return out;
    }

    /// sup norm of (P^2 - P) f over coefficient entries.
    double idempotence_residual(const std::vector<double>& f) const {
        auto pf = apply(f);
        auto ppf = apply(pf);
        double r = 0.0;
        for (std::size_t k = 0; k < pf.size(); ++k) r = std::max(r, std::abs(ppf[k] - pf[k]));
        return r;
    }

private:
    const SpectralBasis* basis_;
    std::vector<double> u_;
    std::vector<double> v_;
};

inline ObliqueProjection oblique_projection(const std::vector<LevelProcess>& processes,
                                            std::size_t m, double t) {
    if (m >= processes.size()) throw std::invalid_argument("oblique_projection: level out of range");
    return ObliqueProjection(processes[m].basis(), processes[m].u_coeffs(t),
                             processes[m].v_coeffs(t));
}

}  // namespace bernstein
