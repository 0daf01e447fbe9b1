#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bernstein/bessel.hpp"
#include "bernstein/quadrature.hpp"

namespace bernstein {

enum class Domain { Interval01, DiskRadial, Imported };

inline std::string domain_name(Domain d) {
    switch (d) {
        case Domain::Interval01: return "interval";
        case Domain::DiskRadial: return "disk-radial";
        case Domain::Imported: return "imported";
    }
    return "unknown";
}

/// One eigenpair of the operator, with the constant that makes the
/// eigenfunction unit-norm under the basis measure.
struct EigenLevel {
    std::size_t index = 0;
    double eigenvalue = 0.0;
    std::function<double(double)> eigenfunction;
    double normalizer = 1.0;
};

/// Ordered eigenpairs of -1/2 Laplacian (Neumann) on the coordinate domain
/// together with the quadrature rule of the basis measure. Immutable after
/// construction and safe to share.
///
/// Conventions: inner products are taken against the basis measure
/// (dx on the interval, r dr on the radial disk). Two-dimensional Lebesgue
/// integrals over the disk carry the angular factor 2*pi, exposed as
/// area_factor(); operations documented as area integrals apply it
/// explicitly.
class SpectralBasis {
public:
    SpectralBasis(std::vector<EigenLevel> levels, Domain domain,
                  std::function<double(double)> measure_weight, QuadratureRule quadrature,
                  double area_factor)
        : levels_(std::move(levels)),
          domain_(domain),
          measure_weight_(std::move(measure_weight)),
          quad_(std::move(quadrature)),
          area_factor_(area_factor) {
        if (levels_.empty()) throw std::invalid_argument("SpectralBasis: needs at least one level");
        grid_values_.resize(levels_.size());
        for (std::size_t m = 0; m < levels_.size(); ++m) {
            grid_values_[m].resize(quad_.size());
            for (std::size_t i = 0; i < quad_.size(); ++i)
                grid_values_[m][i] = levels_[m].eigenfunction(quad_.nodes[i]);
        }
    }

    std::size_t level_count() const { return levels_.size(); }
    const EigenLevel& level(std::size_t m) const { return levels_.at(m); }
    double eigenvalue(std::size_t m) const { return levels_.at(m).eigenvalue; }
    double eval(std::size_t m, double x) const { return levels_.at(m).eigenfunction(x); }
    Domain domain() const { return domain_; }
    double measure_weight(double x) const { return measure_weight_(x); }
    const QuadratureRule& quadrature() const { return quad_; }
    double area_factor() const { return area_factor_; }

    /// Eigenfunction values on the quadrature nodes (cached).
    const std::vector<double>& grid_values(std::size_t m) const { return grid_values_.at(m); }

    /// Quadrature inner product of two grid functions under the basis measure.
    double inner(const std::vector<double>& f, const std::vector<double>& g) const {
        double s = 0.0;
        for (std::size_t i = 0; i < quad_.size(); ++i) s += quad_.weights[i] * f[i] * g[i];
        return s;
    }

    /// Projection of a function onto the first `count` eigenfunctions.
    std::vector<double> project(const std::function<double(double)>& f, std::size_t count) const {
        std::vector<double> fv(quad_.size());
        for (std::size_t i = 0; i < quad_.size(); ++i) fv[i] = f(quad_.nodes[i]);
        return project_grid(fv, count);
    }

    std::vector<double> project_grid(const std::vector<double>& fv, std::size_t count) const {
        std::vector<double> coeffs(count);
        for (std::size_t m = 0; m < count; ++m) coeffs[m] = inner(fv, grid_values_[m]);
        return coeffs;
    }

    /// Reconstruct a coefficient vector at a point.
    double synthesize(const std::vector<double>& coeffs, double x) const {
        double s = 0.0;
        for (std::size_t m = 0; m < coeffs.size(); ++m) s += coeffs[m] * eval(m, x);
        return s;
    }

    /// Largest Gram-matrix deviation |(f_m,f_n) - delta_mn| over the first
    /// `count` levels.
    double orthonormality_defect(std::size_t count) const {
        double worst = 0.0;
        for (std::size_t m = 0; m < count; ++m)
            for (std::size_t n = m; n < count; ++n) {
                double d = std::abs(inner(grid_values_[m], grid_values_[n]) - (m == n ? 1.0 : 0.0));
                worst = std::max(worst, d);
            }
        return worst;
    }

    /// Sup norm of f_m, from the quadrature grid and the domain endpoints.
    double sup_norm(std::size_t m) const {
        double s = std::max(std::abs(eval(m, 0.0)), std::abs(eval(m, 1.0)));
        for (double v : grid_values_[m]) s = std::max(s, std::abs(v));
        return s;
    }

private:
    std::vector<EigenLevel> levels_;
    Domain domain_;
    std::function<double(double)> measure_weight_;
    QuadratureRule quad_;
    double area_factor_;
    std::vector<std::vector<double>> grid_values_;
};

namespace detail {

inline void verify_builtin_orthonormality(const SpectralBasis& basis, std::size_t quad_order) {
    double defect = basis.orthonormality_defect(basis.level_count());
    if (defect > 1e-8) {
        std::ostringstream msg;
        msg << "basis construction: quadrature order " << quad_order << " undersamples "
            << basis.level_count() << " oscillatory levels (Gram defect " << defect
            << " > 1e-8); raise quad_order";
        throw std::runtime_error(msg.str());
    }
}

}  // namespace detail

/// Neumann basis of -1/2 d^2/dx^2 on (0,1):
/// lambda_m = (m pi)^2 / 2, f_0 = 1, f_m(x) = sqrt(2) cos(m pi x).
inline SpectralBasis interval_basis(std::size_t level_count, std::size_t quad_order) {
    if (level_count == 0) throw std::invalid_argument("interval_basis: level_count must be >= 1");
    if (quad_order < 16) throw std::invalid_argument("interval_basis: quad_order must be >= 16");
    const double pi = detail::kPi;
    std::vector<EigenLevel> levels;
    levels.reserve(level_count);
    for (std::size_t m = 0; m < level_count; ++m) {
        EigenLevel lvl;
        lvl.index = m;
        lvl.eigenvalue = 0.5 * (m * pi) * (m * pi);
        if (m == 0) {
            lvl.normalizer = 1.0;
            lvl.eigenfunction = [](double) { return 1.0; };
        } else {
            lvl.normalizer = std::sqrt(2.0);
            double freq = m * pi;
            lvl.eigenfunction = [freq](double x) { return std::sqrt(2.0) * std::cos(freq * x); };
        }
        levels.push_back(std::move(lvl));
    }
    SpectralBasis basis(std::move(levels), Domain::Interval01, [](double) { return 1.0; },
                        gauss_legendre_01(quad_order), 1.0);
    detail::verify_builtin_orthonormality(basis, quad_order);
    return basis;
}

/// Radial Neumann basis of -1/2 Laplacian on the unit disk:
/// lambda_0 = 0, f_0 = sqrt(2); lambda_m = z_m^2 / 2 with z_m the m-th
/// positive zero of J1, f_m(r) = (sqrt(2)/|J0(z_m)|) J0(z_m r).
/// Orthonormal under the measure r dr.
inline SpectralBasis disk_basis(std::size_t level_count, std::size_t quad_order) {
    if (level_count == 0) throw std::invalid_argument("disk_basis: level_count must be >= 1");
    if (quad_order < 16) throw std::invalid_argument("disk_basis: quad_order must be >= 16");
    std::vector<double> zeros;
    if (level_count > 1) zeros = bessel_j1_positive_zeros(level_count - 1);
    std::vector<EigenLevel> levels;
    levels.reserve(level_count);
    for (std::size_t m = 0; m < level_count; ++m) {
        EigenLevel lvl;
        lvl.index = m;
        if (m == 0) {
            lvl.eigenvalue = 0.0;
            lvl.normalizer = std::sqrt(2.0);
            lvl.eigenfunction = [](double) { return std::sqrt(2.0); };
        } else {
            double z = zeros[m - 1];
            lvl.eigenvalue = 0.5 * z * z;
            double norm = std::sqrt(2.0) / std::abs(bessel_j0(z));
            lvl.normalizer = norm;
            lvl.eigenfunction = [z, norm](double r) { return norm * bessel_j0(z * r); };
        }
        levels.push_back(std::move(lvl));
    }
    SpectralBasis basis(std::move(levels), Domain::DiskRadial, [](double r) { return r; },
                        weighted_rule(quad_order, [](double r) { return r; }),
                        2.0 * detail::kPi);
    detail::verify_builtin_orthonormality(basis, quad_order);
    return basis;
}

namespace detail {

inline std::string format_real(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(16) << v;
    return os.str();
}

struct TabulatedFunction {
    std::vector<double> nodes;   // strictly increasing
    std::vector<double> values;

    double operator()(double x) const {
        if (x <= nodes.front()) return values.front();
        if (x >= nodes.back()) return values.back();
        auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
        std::size_t hi = static_cast<std::size_t>(it - nodes.begin());
        std::size_t lo = hi - 1;
        double t = (x - nodes[lo]) / (nodes[hi] - nodes[lo]);
        return values[lo] + t * (values[hi] - values[lo]);
    }
};

}  // namespace detail

/// Write the basis tabulated on `node_count` equispaced nodes of [0,1].
/// Format: header `basis <domain> <level_count> <node_count>`, the node
/// coordinates, then per level a `lambda <value>` line followed by the
/// eigenfunction values, all reals in scientific notation.
inline void write_basis_file(const SpectralBasis& basis, std::ostream& os,
                             std::size_t node_count = 201) {
    if (node_count < 2) throw std::invalid_argument("write_basis_file: node_count must be >= 2");
    os << "basis " << domain_name(basis.domain()) << " " << basis.level_count() << " "
       << node_count << "\n";
    std::vector<double> nodes(node_count);
    for (std::size_t i = 0; i < node_count; ++i)
        nodes[i] = static_cast<double>(i) / static_cast<double>(node_count - 1);
    for (double x : nodes) os << detail::format_real(x) << "\n";
    for (std::size_t m = 0; m < basis.level_count(); ++m) {
        os << "lambda " << detail::format_real(basis.eigenvalue(m)) << "\n";
        for (double x : nodes) os << detail::format_real(basis.eval(m, x)) << "\n";
    }
}

/// Load a basis from the tabulated text format. Eigenfunctions are
/// piecewise-linear between the supplied nodes; levels are stably sorted by
/// eigenvalue and re-indexed; orthonormality is re-verified on load and a
/// defect beyond 1e-4 rejects the file naming the offending pair.
inline SpectralBasis import_basis(std::istream& is, std::size_t quad_order = 128) {
    std::string tag;
    std::string domain_str;
    std::size_t level_count = 0, node_count = 0;
    if (!(is >> tag >> domain_str >> level_count >> node_count) || tag != "basis")
        throw std::runtime_error("import_basis: malformed header (expected 'basis <domain> <levels> <nodes>')");
    if (level_count == 0 || node_count < 2)
        throw std::runtime_error("import_basis: header declares no usable levels/nodes");

    Domain dom;
    std::function<double(double)> weight;
    double area;
    if (domain_str == "interval") {
        dom = Domain::Interval01;
        weight = [](double) { return 1.0; };
        area = 1.0;
    } else if (domain_str == "disk-radial") {
        dom = Domain::DiskRadial;
        weight = [](double r) { return r; };
        area = 2.0 * detail::kPi;
    } else if (domain_str == "imported") {
        dom = Domain::Imported;
        weight = [](double) { return 1.0; };
        area = 1.0;
    } else {
        throw std::runtime_error("import_basis: unknown domain '" + domain_str + "'");
    }

    std::vector<double> nodes(node_count);
    for (std::size_t i = 0; i < node_count; ++i)
        if (!(is >> nodes[i])) throw std::runtime_error("import_basis: truncated node list");
    if (!std::is_sorted(nodes.begin(), nodes.end()))
        throw std::runtime_error("import_basis: node coordinates must be increasing");

    struct RawLevel {
        double lambda;
        detail::TabulatedFunction fn;
    };
    std::vector<RawLevel> raw(level_count);
    for (std::size_t m = 0; m < level_count; ++m) {
        if (!(is >> tag >> raw[m].lambda) || tag != "lambda")
            throw std::runtime_error("import_basis: expected 'lambda <value>' line");
        raw[m].fn.nodes = nodes;
        raw[m].fn.values.resize(node_count);
        for (std::size_t i = 0; i < node_count; ++i)
            if (!(is >> raw[m].fn.values[i]))
                throw std::runtime_error("import_basis: truncated eigenfunction table");
    }

    std::stable_sort(raw.begin(), raw.end(),
                     [](const RawLevel& a, const RawLevel& b) { return a.lambda < b.lambda; });

    // Tabulation slightly shrinks quadrature norms (piecewise-linear bias),
    // so each level is rescaled to unit norm before the Gram check.
    QuadratureRule rule = weighted_rule(quad_order, weight);
    std::vector<EigenLevel> levels(level_count);
    for (std::size_t m = 0; m < level_count; ++m) {
        double nrm2 = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            double v = raw[m].fn(rule.nodes[i]);
            nrm2 += rule.weights[i] * v * v;
        }
        if (!(nrm2 > 0.0))
            throw std::runtime_error("import_basis: level with vanishing norm");
        double scale = 1.0 / std::sqrt(nrm2);
        levels[m].index = m;
        levels[m].eigenvalue = raw[m].lambda;
        levels[m].normalizer = scale;
        detail::TabulatedFunction fn = raw[m].fn;
        for (double& v : fn.values) v *= scale;
        levels[m].eigenfunction = std::move(fn);
    }

    SpectralBasis basis(std::move(levels), dom, weight, std::move(rule), area);
    for (std::size_t m = 0; m < level_count; ++m)
        for (std::size_t n = m; n < level_count; ++n) {
            double d = std::abs(basis.inner(basis.grid_values(m), basis.grid_values(n)) -
                                (m == n ? 1.0 : 0.0));
            if (d > 1e-4) {
                std::ostringstream msg;
                msg << "import_basis: orthonormality violated for pair (" << m << "," << n
                    << "), defect " << d << " > 1e-4";
                throw std::runtime_error(msg.str());
            }
        }
    return basis;
}

inline SpectralBasis import_basis_file(const std::string& path, std::size_t quad_order = 128) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("import_basis: cannot open '" + path + "'");
    return import_basis(is, quad_order);
}

}  // namespace bernstein
