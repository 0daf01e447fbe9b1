#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bernstein {

namespace detail {

inline constexpr double kPi = 3.14159265358979323846;
// Series/asymptotic switchover. The ascending series is summed in extended
// precision so cancellation stays below 1e-14 up to this point, and the
// Hankel expansion reaches optimal-truncation error below 1e-13 beyond it.
inline constexpr double kBesselSwitch = 16.0;

/// Ascending power series for J_nu, nu in {0,1}, extended precision.
inline long double bessel_series(int nu, long double x) {
    const long double hx = 0.5L * x;
    long double term = (nu == 0) ? 1.0L : hx;
    long double sum = term;
    const long double x2 = -hx * hx;
    for (int k = 1; k < 200; ++k) {
        term *= x2 / (static_cast<long double>(k) * static_cast<long double>(k + nu));
        sum += term;
        if (std::abs(term) < 1e-25L * std::abs(sum) + 1e-30L) break;
    }
    return sum;
}

/// Hankel asymptotic expansion for J_nu, optimally truncated.
/// J_nu(x) = sqrt(2/(pi x)) Re[(P + iQ) e^{i chi}], chi = x - (2nu+1)pi/4.
inline long double bessel_asymptotic(int nu, long double x) {
    const long double mu = 4.0L * nu * nu;
    long double t = 1.0L;        // t_k = (nu,k) / (2x)^k
    std::complex<long double> piq(1.0L, 0.0L);
    long double prev = std::abs(t);
    std::complex<long double> ipow(0.0L, 1.0L);
    for (int k = 1; k < 60; ++k) {
        const long double odd = 2.0L * k - 1.0L;
        t *= (mu - odd * odd) / (8.0L * k * x);
        if (std::abs(t) >= prev) break;  // optimal truncation
        prev = std::abs(t);
        piq += ipow * t;
        ipow *= std::complex<long double>(0.0L, 1.0L);
    }
    const long double chi = x - (2 * nu + 1) * static_cast<long double>(kPi) / 4.0L;
    const std::complex<long double> phase(std::cos(chi), std::sin(chi));
    return std::sqrt(2.0L / (static_cast<long double>(kPi) * x)) * (piq * phase).real();
}

inline double bessel_j(int nu, double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("bessel_j: non-finite argument");
    const long double ax = std::abs(static_cast<long double>(x));
    long double val = (ax <= kBesselSwitch) ? bessel_series(nu, ax) : bessel_asymptotic(nu, ax);
    if (nu == 1 && x < 0) val = -val;  // J1 is odd, J0 even
    return static_cast<double>(val);
}

}  // namespace detail

/// Bessel function of the first kind of order zero.
inline double bessel_j0(double x) { return detail::bessel_j(0, x); }

/// Bessel function of the first kind of order one. J0' = -J1.
inline double bessel_j1(double x) { return detail::bessel_j(1, x); }

/// First `count` positive zeros of J1, in increasing order.
///
/// The k-th zero lies near (k + 1/4)pi; each one is bracketed in
/// ((k - 1/4)pi, (k + 3/4)pi), refined by bisection and polished with one
/// Newton step using J1'(x) = J0(x) - J1(x)/x.
inline std::vector<double> bessel_j1_positive_zeros(std::size_t count) {
    if (count == 0) throw std::invalid_argument("bessel_j1_positive_zeros: count must be positive");
    std::vector<double> zeros;
    zeros.reserve(count);
    for (std::size_t k = 1; k <= count; ++k) {
        double lo = (static_cast<double>(k) - 0.25) * detail::kPi;
        double hi = (static_cast<double>(k) + 0.75) * detail::kPi;
        double flo = bessel_j1(lo);
        double fhi = bessel_j1(hi);
        if (flo == 0.0) { zeros.push_back(lo); continue; }
        if (fhi == 0.0) { zeros.push_back(hi); continue; }
        if (flo * fhi > 0.0)
            throw std::runtime_error("bessel_j1_positive_zeros: bracket holds no sign change");
        for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
            double mid = 0.5 * (lo + hi);
            double fm = bessel_j1(mid);
            if (fm == 0.0) { lo = hi = mid; break; }
            if (flo * fm < 0.0) { hi = mid; fhi = fm; }
            else { lo = mid; flo = fm; }
        }
        double z = 0.5 * (lo + hi);
        double deriv = bessel_j0(z) - bessel_j1(z) / z;
        z -= bessel_j1(z) / deriv;
        zeros.push_back(z);
    }
    return zeros;
}

}  // namespace bernstein
