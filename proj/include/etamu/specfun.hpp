#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "etamu/errors.hpp"

namespace etamu {

using Complex = std::complex<double>;

namespace detail {

/// Reentrant log|Gamma(x)| for real x.
inline double lgamma_real(double x) {
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

inline double sinpi(double x) {
    double r = std::fmod(x, 2.0);
    if (r < -1.0) r += 2.0;
    if (r > 1.0) r -= 2.0;
    if (r == 0.0 || r == 1.0 || r == -1.0) return 0.0;
    if (r > 0.5) return std::sin(std::numbers::pi * (1.0 - r));
    if (r < -0.5) return -std::sin(std::numbers::pi * (1.0 + r));
    return std::sin(std::numbers::pi * r);
}

inline double cospi(double x) {
    double r = std::fmod(std::abs(x), 2.0);
    if (r == 0.5 || r == 1.5) return 0.0;
    if (r > 1.0) r = 2.0 - r;
    return -sinpi(r - 0.5);
}

inline Complex sinpi(Complex z) {
    const double y = std::numbers::pi * z.imag();
    return {sinpi(z.real()) * std::cosh(y), cospi(z.real()) * std::sinh(y)};
}

// B_{2k} / (2k (2k - 1)), k = 1..10
inline constexpr std::array<double, 10> kStirlingCoeffs = {
    1.0 / 12.0,          -1.0 / 360.0,         1.0 / 1260.0,       -1.0 / 1680.0,
    1.0 / 1188.0,        -691.0 / 360360.0,    1.0 / 156.0,        -3617.0 / 122400.0,
    43867.0 / 244188.0,  -174611.0 / 125400.0,
};

inline constexpr double kStirlingThreshold = 7.0;

inline Complex log_gamma_stirling(Complex z) {
    const Complex inv = 1.0 / z;
    const Complex inv2 = inv * inv;
    Complex series = 0.0;
    Complex power = inv;
    for (double c : kStirlingCoeffs) {
        series += c * power;
        power *= inv2;
    }
    return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

}  // namespace detail

/// Principal branch of log Gamma(z): analytic off the non-positive real axis,
/// real on the positive real axis, and log Gamma(z + 1) = log z + log Gamma(z).
inline Complex log_gamma(Complex z) {
    if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real())) {
        throw PoleAtNonPositiveInteger("log_gamma: pole at z = " + detail::num(z.real()));
    }
    if (z.real() > detail::kStirlingThreshold || std::abs(z.imag()) > detail::kStirlingThreshold) {
        return detail::log_gamma_stirling(z);
    }
    if (z.real() < 0.1) {
        // Reflection; the imaginary shift selects the principal branch.
        const double shift = std::copysign(2.0 * std::numbers::pi, z.imag()) * std::floor(0.5 * z.real() + 0.25);
        return Complex(std::log(std::numbers::pi), shift) - std::log(detail::sinpi(z)) - log_gamma(1.0 - z);
    }
    // Upward recurrence; each principal log keeps the branch of the result.
    Complex shifted = z;
    Complex logs = 0.0;
    while (shifted.real() <= detail::kStirlingThreshold) {
        logs += std::log(shifted);
        shifted += 1.0;
    }
    return detail::log_gamma_stirling(shifted) - logs;
}

/// exp(w * Log z) with the principal logarithm (cut along the negative real axis).
inline Complex principal_power(Complex z, double w) {
    if (z == Complex(0.0, 0.0)) {
        throw ZeroBase("principal_power: zero base");
    }
    return std::exp(w * std::log(z));
}

/// Regularized lower incomplete gamma P(a, x).
inline double regularized_gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double regularized_gamma_q(double a, double x);

namespace detail {

inline constexpr int kIncGammaMaxIter = 100000;

/// log(x^a e^{-x} / Gamma(a))
inline double log_gamma_prefactor(double a, double x) {
    return a * std::log(x) - x - lgamma_real(a);
}

// Series for P(a, x), relative accuracy when x < a + 1.
inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < kIncGammaMaxIter; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(log_gamma_prefactor(a, x));
}

// Modified Lentz continued fraction for Q(a, x), x >= 1 or x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kIncGammaMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(log_gamma_prefactor(a, x)) * h;
}

inline bool use_fraction(double a, double x) { return x >= a + 1.0 || (a < 1.0 && x >= 1.0); }

}  // namespace detail

inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw NonPositiveShape("regularized_gamma_p: shape must be positive");
    if (x < 0.0) throw ParameterOutOfRange("x", x, "[0, inf)");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (detail::use_fraction(a, x)) return 1.0 - detail::gamma_q_fraction(a, x);
    return detail::gamma_p_series(a, x);
}

inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0)) throw NonPositiveShape("regularized_gamma_q: shape must be positive");
    if (x < 0.0) throw ParameterOutOfRange("x", x, "[0, inf)");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (detail::use_fraction(a, x)) return detail::gamma_q_fraction(a, x);
    return 1.0 - detail::gamma_p_series(a, x);
}

/// Upper incomplete gamma Gamma(p, x) = integral_x^inf t^{p-1} e^{-t} dt.
inline double upper_incomplete_gamma(double p, double x) {
    if (!(p > 0.0)) throw NonPositiveShape("upper_incomplete_gamma: shape must be positive");
    if (x < 0.0) throw ParameterOutOfRange("x", x, "[0, inf)");
    if (x == 0.0) return std::tgamma(p);
    if (detail::use_fraction(p, x)) {
        // Gamma(p) cancels against the prefactor, which avoids overflow for large p.
        const double q = detail::gamma_q_fraction(p, x);
        return q == 0.0 ? 0.0 : std::exp(std::log(q) + detail::lgamma_real(p));
    }
    return std::tgamma(p) * (1.0 - detail::gamma_p_series(p, x));
}

namespace detail {

inline void check_bessel_args(double nu, double x) {
    if (!(nu >= -0.5)) throw InvalidOrder("bessel_i: order must be >= -0.5");
    if (!(x >= 0.0)) throw ParameterOutOfRange("x", x, "[0, inf)");
}

inline bool bessel_use_asymptotic(double nu, double x) { return x > 30.0 && x > 0.5 * nu * nu + 10.0; }

// e^{-x} I_nu(x) from the ascending series; all terms are positive.
inline double bessel_i_scaled_series(double nu, double x) {
    const double q = 0.25 * x * x;
    double term = std::exp(nu * std::log(0.5 * x) - lgamma_real(nu + 1.0) - x);
    double sum = term;
    for (int k = 1; k < 100000; ++k) {
        term *= q / (k * (k + nu));
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

// Hankel expansion of e^{-x} I_nu(x) for x large compared with nu^2.
inline double bessel_i_scaled_asymptotic(double nu, double x) {
    const double four_nu2 = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = -term * (four_nu2 - odd * odd) / (8.0 * k * x);
        if (std::abs(next) > std::abs(term)) break;
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

}  // namespace detail

/// Exponentially scaled modified Bessel function e^{-x} I_nu(x).
inline double bessel_i_scaled(double nu, double x) {
    detail::check_bessel_args(nu, x);
    if (x == 0.0) {
        if (nu == 0.0) return 1.0;
        return nu > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    if (detail::bessel_use_asymptotic(nu, x)) return detail::bessel_i_scaled_asymptotic(nu, x);
    return detail::bessel_i_scaled_series(nu, x);
}

/// Modified Bessel function of the first kind I_nu(x), nu >= -1/2, x >= 0.
inline double bessel_i(double nu, double x) {
    detail::check_bessel_args(nu, x);
    if (x == 0.0) return bessel_i_scaled(nu, x);
    if (detail::bessel_use_asymptotic(nu, x)) return detail::bessel_i_scaled_asymptotic(nu, x) * std::exp(x);
    // Unscaled series avoids the round trip through exp(-x) * exp(x).
    const double q = 0.25 * x * x;
    double term = std::exp(nu * std::log(0.5 * x) - detail::lgamma_real(nu + 1.0));
    double sum = term;
    for (int k = 1; k < 100000; ++k) {
        term *= q / (k * (k + nu));
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

}  // namespace etamu
