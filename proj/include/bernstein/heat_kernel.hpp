#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "bernstein/spectral_basis.hpp"

namespace bernstein {

/// Truncated spectral heat kernel g(x,t,y) = sum_m e^{-t lambda_m} f_m(x) f_m(y),
/// a transition density with respect to the basis measure. Truncated
/// eigenexpansions oscillate negative at very small times, so evaluation is
/// refused below the certified time t_min instead of clamping.
class HeatKernel {
public:
    HeatKernel(const SpectralBasis& basis, std::size_t truncation_level, double t_min)
        : basis_(&basis), truncation_(truncation_level), t_min_(t_min) {
        if (truncation_ == 0 || truncation_ > basis.level_count())
            throw std::invalid_argument("HeatKernel: truncation_level outside [1, level_count]");
        if (!(t_min_ > 0.0)) throw std::invalid_argument("HeatKernel: t_min must be positive");
    }

    const SpectralBasis& basis() const { return *basis_; }
    std::size_t truncation() const { return truncation_; }
    double t_min() const { return t_min_; }

    void require_time(double t) const {
        if (t < t_min_) {
            std::ostringstream msg;
            msg << "heat kernel: t = " << t << " below certified t_min = " << t_min_
                << "; truncation error is uncontrolled there";
            throw std::domain_error(msg.str());
        }
    }

    /// g(x,t,y); symmetric in (x,y) by construction of the symmetric sum.
    double eval(double x, double t, double y) const {
        require_time(t);
        double s = 0.0;
        for (std::size_t m = 0; m < truncation_; ++m)
            s += std::exp(-t * basis_->eigenvalue(m)) * basis_->eval(m, x) * basis_->eval(m, y);
        return s;
    }

    /// g on a pair of quadrature-grid points, by cached eigenfunction values.
    double eval_grid(std::size_t i, double t, std::size_t j) const {
        require_time(t);
        double s = 0.0;
        for (std::size_t m = 0; m < truncation_; ++m)
            s += std::exp(-t * basis_->eigenvalue(m)) * basis_->grid_values(m)[i] *
                 basis_->grid_values(m)[j];
        return s;
    }

    /// Full grid kernel matrix at elapsed time t.
    std::vector<std::vector<double>> grid_matrix(double t) const {
        require_time(t);
        const std::size_t n = basis_->quadrature().size();
        std::vector<double> decay(truncation_);
        for (std::size_t m = 0; m < truncation_; ++m)
            decay[m] = std::exp(-t * basis_->eigenvalue(m));
        std::vector<std::vector<double>> g(n, std::vector<double>(n, 0.0));
        for (std::size_t m = 0; m < truncation_; ++m) {
            const auto& fm = basis_->grid_values(m);
            for (std::size_t i = 0; i < n; ++i) {
                double fi = decay[m] * fm[i];
                for (std::size_t j = 0; j < n; ++j) g[i][j] += fi * fm[j];
            }
        }
        return g;
    }

    /// Diagonal action of e^{-tH} on eigenbasis coefficients; t = 0 is the
    /// identity.
    std::vector<double> semigroup_apply(double t, const std::vector<double>& coeffs) const {
        if (t < 0.0) throw std::invalid_argument("semigroup_apply: t must be >= 0");
        if (coeffs.size() > truncation_)
            throw std::invalid_argument("semigroup_apply: coefficient vector exceeds truncation");
        std::vector<double> out(coeffs.size());
        for (std::size_t m = 0; m < coeffs.size(); ++m)
            out[m] = coeffs[m] * std::exp(-t * basis_->eigenvalue(m));
        return out;
    }

    /// Z(T) = sum_m e^{-T lambda_m} over the truncation.
    double partition_function(double T) const {
        require_time(T);
        double s = 0.0;
        for (std::size_t m = 0; m < truncation_; ++m) s += std::exp(-T * basis_->eigenvalue(m));
        return s;
    }

    /// Trace route for Z(T): quadrature of the diagonal kernel under the
    /// basis measure (area factor and 1/area of the planar kernel cancel).
    double partition_function_trace(double T) const {
        require_time(T);
        const auto& quad = basis_->quadrature();
        double s = 0.0;
        for (std::size_t i = 0; i < quad.size(); ++i) s += quad.weights[i] * eval_grid(i, T, i);
        return s;
    }

    /// Smallest certified time for this truncation: min over the quadrature
    /// grid of the kernel must stay above -1e-8.
    static double certify_t_min(const SpectralBasis& basis, std::size_t truncation,
                                double eps_pos = 1e-8) {
        HeatKernel probe(basis, truncation, std::numeric_limits<double>::min());
        const std::size_t n = basis.quadrature().size();
        double t = 4.0;
        double certified = -1.0;
        while (t >= 1e-5) {
            double lo = 0.0;
            for (std::size_t i = 0; i < n && lo >= -eps_pos; ++i)
                for (std::size_t j = i; j < n; ++j)
                    lo = std::min(lo, probe.eval_grid(i, t, j));
            if (lo < -eps_pos) break;
            certified = t;
            t *= 0.5;
        }
        if (certified < 0.0)
            throw std::runtime_error("certify_t_min: kernel not positive at any probed time");
        return certified;
    }

private:
    const SpectralBasis* basis_;
    std::size_t truncation_;
    double t_min_;
};

/// Smallest N with computed tail sum_{m >= N} e^{-t_min lambda_m} sup|f_m|^2
/// below tol. Throws with the achievable tolerance when the basis holds too
/// few levels to certify the request.
inline std::size_t truncation_level(const SpectralBasis& basis, double t_min, double tol) {
    if (!(t_min > 0.0)) throw std::invalid_argument("truncation_level: t_min must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("truncation_level: tol must be positive");
    const std::size_t M = basis.level_count();
    std::vector<double> term(M);
    for (std::size_t m = 0; m < M; ++m) {
        double s = basis.sup_norm(m);
        term[m] = std::exp(-t_min * basis.eigenvalue(m)) * s * s;
    }
    if (!(term[M - 1] < tol)) {
        std::ostringstream msg;
        msg << "truncation_level: basis has too few levels to certify tol = " << tol
            << "; achievable tolerance with " << M << " levels is " << term[M - 1];
        throw std::runtime_error(msg.str());
    }
    double tail = 0.0;  // tail over the available levels, accumulated from the top
    std::size_t best = 1;
    for (std::size_t m = M; m-- > 1;) {
        tail += term[m];
        if (tail >= tol) { best = m + 1; break; }
        best = m;
    }
    return best == 0 ? 1 : best;
}

}  // namespace bernstein
