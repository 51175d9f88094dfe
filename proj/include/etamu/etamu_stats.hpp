#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "etamu/errors.hpp"
#include "etamu/fading_params.hpp"
#include "etamu/laplace_inversion.hpp"
#include "etamu/specfun.hpp"

namespace etamu {

/// Evenly spaced grid start, start + step, ... up to stop (inclusive within round-off).
struct SnrGrid {
    double start = 0.0;
    double stop = 1.0;
    double step = 0.1;

    void validate() const {
        if (!(start >= 0.0) || !std::isfinite(start)) throw ParameterOutOfRange("grid start", start, "[0, inf)");
        if (!(stop > start) || !std::isfinite(stop)) throw ParameterOutOfRange("grid stop", stop, "(start, inf)");
        if (!(step > 0.0) || !std::isfinite(step)) throw ParameterOutOfRange("grid step", step, "(0, inf)");
    }

    std::vector<double> points() const {
        validate();
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<double>(i) * step;
        return out;
    }
};

/// E[exp(-s Y)] = prod_l (1 + s A_l)^{-mu_l} (1 + s B_l)^{-mu_l}, accumulated as a
/// sum of principal logarithms.
inline Complex mgf(const MrcChannel& channel, Complex s) {
    Complex log_m = 0.0;
    for (std::size_t l = 0; l < channel.size(); ++l) {
        const auto& c = channel.constant(l);
        const Complex za = 1.0 + s * c.a;
        const Complex zb = 1.0 + s * c.b;
        if (za == Complex(0.0, 0.0) || zb == Complex(0.0, 0.0)) {
            throw EvaluationAtBranchPoint("mgf evaluated at a branch point of branch " + std::to_string(l));
        }
        log_m -= channel.branch(l).mu * (std::log(za) + std::log(zb));
    }
    return std::exp(log_m);
}

/// The MGF packaged for the inversion engine.
inline TransformFn mgf_transform(const MrcChannel& channel) {
    TransformFn f;
    f.eval = [channel](Complex s) { return mgf(channel, s); };
    f.sigma_max = -1.0 / channel.max_scale();
    f.decay = 2.0 * channel.total_mu();
    f.scale = channel.mean();
    return f;
}

/// Below this |H|/h the single-branch density is evaluated as its Gamma limit.
inline constexpr double kNakagamiThreshold = 1e-8;

namespace detail {

inline double gamma_density(double shape, double scale, double x) {
    if (x == 0.0) {
        if (shape > 1.0) return 0.0;
        if (shape == 1.0) return 1.0 / scale;
        return std::numeric_limits<double>::infinity();
    }
    return std::exp((shape - 1.0) * std::log(x) - x / scale - lgamma_real(shape) - shape * std::log(scale));
}

}  // namespace detail

/// Closed-form density of one squared eta-mu variate (Bessel form).
inline double pdf_single_closed(const FadingBranch& branch, double gamma) {
    const DerivedConstants c = derive_constants(branch);
    if (!(gamma >= 0.0) || std::isnan(gamma)) throw ParameterOutOfRange("gamma", gamma, "[0, inf)");
    const double mu = branch.mu;
    const double snr = branch.mean_snr;
    const double absH = std::abs(c.bigH);
    if (absH < kNakagamiThreshold * c.h) {
        return detail::gamma_density(2.0 * mu, snr / (2.0 * mu), gamma);
    }
    const double nu = mu - 0.5;
    if (gamma == 0.0) {
        // I_nu(x) ~ (x/2)^nu / Gamma(nu + 1) as x -> 0.
        if (mu > 0.5) return 0.0;
        if (mu < 0.5) return std::numeric_limits<double>::infinity();
        return std::sqrt(c.h) / snr;
    }
    const double log_norm = std::log(2.0 * std::sqrt(std::numbers::pi)) + (mu + 0.5) * std::log(mu) +
                            mu * std::log(c.h) - detail::lgamma_real(mu) - nu * std::log(absH) -
                            (mu + 0.5) * std::log(snr);
    // exp(-2 mu h g / snr) I_nu(2 mu |H| g / snr) = exp(-g / max(a, b)) * e^{-x} I_nu(x)
    const double x = 2.0 * mu * absH * gamma / snr;
    const double decay = gamma / std::max(c.a, c.b);
    const double bessel = bessel_i_scaled(nu, x);
    return std::exp(log_norm + nu * std::log(gamma) - decay) * bessel;
}

/// Density of the combiner output by contour inversion of the MGF, for any L.
inline EvalResult pdf_sum_contour(const MrcChannel& channel, double y, const InversionConfig& cfg = {}) {
    return invert_at(mgf_transform(channel), y, cfg);
}

/// Density of the combiner output; a single branch uses the closed form.
inline EvalResult pdf_sum(const MrcChannel& channel, double y, const InversionConfig& cfg = {}) {
    if (!(y > 0.0) || !std::isfinite(y)) throw ParameterOutOfRange("y", y, "(0, inf)");
    if (channel.size() == 1) {
        const double v = pdf_single_closed(channel.branch(0), y);
        return {v, 1e-13 * std::abs(v), true};
    }
    return pdf_sum_contour(channel, y, cfg);
}

/// Distribution function of the combiner output, from the inverse transform of M(s)/s.
inline EvalResult cdf_sum(const MrcChannel& channel, double y, const InversionConfig& cfg = {}) {
    EvalResult r = invert_scaled_at(mgf_transform(channel), y, cfg);
    const double overshoot = r.value < 0.0 ? -r.value : r.value - 1.0;
    if (overshoot > 0.0) {
        if (overshoot > r.abs_err_est) {
            if (cfg.throw_on_failure) {
                throw ConvergenceFailure("CDF left [0, 1] by more than its error estimate", r.abs_err_est);
            }
            r.converged = false;
        }
        r.value = std::clamp(r.value, 0.0, 1.0);
    }
    return r;
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

inline Moments moments(const MrcChannel& channel) {
    Moments m;
    for (std::size_t l = 0; l < channel.size(); ++l) {
        const auto& c = channel.constant(l);
        const double mu = channel.branch(l).mu;
        m.mean += mu * (c.a + c.b);
        m.variance += mu * (c.a * c.a + c.b * c.b);
    }
    return m;
}

}  // namespace etamu
