#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "etamu/errors.hpp"
#include "etamu/quadrature.hpp"
#include "etamu/specfun.hpp"

namespace etamu {

/// A Laplace-domain function F(s) together with what the inversion engine
/// needs to know about it.
struct TransformFn {
    std::function<Complex(Complex)> eval;
    /// Abscissa of the rightmost singularity; must be <= 0.
    double sigma_max = 0.0;
    /// |F(s)| = O(|s|^-decay) as |s| -> inf.
    double decay = 1.0;
    /// Optional branch point on the positive real axis (cut along [x, inf)).
    std::optional<double> branch_point;
    /// Characteristic size of the time-domain variable, used to detect
    /// degenerate small arguments.
    double scale = 1.0;

    Complex operator()(Complex s) const { return eval(s); }
};

enum class ContourMethod { FixedTalbot, VerticalLine };

inline const char* to_string(ContourMethod m) { return m == ContourMethod::FixedTalbot ? "talbot" : "vertical"; }

struct InversionConfig {
    ContourMethod method = ContourMethod::FixedTalbot;
    /// Base node count; the error estimate compares against twice this many.
    int nodes = 32;
    /// Largest node count the doubling loop may reach.
    int max_nodes = 128;
    /// Vertical-line abscissa; NaN selects a default per operation.
    double abscissa = std::numeric_limits<double>::quiet_NaN();
    double target_abs_tol = 1e-10;
    /// Optional relative tolerance; the effective tolerance is
    /// max(target_abs_tol, target_rel_tol * |value|).
    double target_rel_tol = 0.0;
    /// When false, a non-converged result is returned with converged == false
    /// instead of raising ConvergenceFailure.
    bool throw_on_failure = true;

    double tolerance_for(double value) const { return std::max(target_abs_tol, target_rel_tol * std::abs(value)); }
};

/// A computed scalar with an a-posteriori absolute error estimate.
struct EvalResult {
    double value = 0.0;
    double abs_err_est = 0.0;
    bool converged = true;
};

inline void validate_config(const InversionConfig& cfg) {
    if (cfg.nodes < 8 || cfg.nodes % 2 != 0) {
        throw ParameterOutOfRange("nodes", cfg.nodes, "even integer >= 8");
    }
    if (cfg.max_nodes < 2 * cfg.nodes) {
        throw ParameterOutOfRange("max_nodes", cfg.max_nodes, "[2 * nodes, inf)");
    }
    if (!(cfg.target_abs_tol > 0.0)) {
        throw ParameterOutOfRange("target_abs_tol", cfg.target_abs_tol, "(0, inf)");
    }
    if (!(cfg.target_rel_tol >= 0.0)) {
        throw ParameterOutOfRange("target_rel_tol", cfg.target_rel_tol, "[0, inf)");
    }
}

namespace detail {

// Optimized cotangent (Talbot) contour
//   s(theta) = (N / t) (-sigma + mu theta cot(alpha theta) + i nu theta),  |theta| < pi,
// discretized with the midpoint rule. The parameters balance discretization
// error against the e^{st} growth at the real-axis crossing.
inline constexpr double kTalbotSigma = 0.6122;
inline constexpr double kTalbotMu = 0.5017;
inline constexpr double kTalbotAlpha = 0.6407;
inline constexpr double kTalbotNu = 0.2645;

inline double talbot_crossing(int nodes, double t) {
    return nodes / t * (kTalbotMu / kTalbotAlpha - kTalbotSigma);
}

struct ContourSum {
    double value = 0.0;
    /// Sum of the absolute contributions; bounds the rounding error.
    double magnitude = 0.0;
};

template <class G>
ContourSum talbot_sum(const G& transform, double t, int nodes, double shift) {
    const double scale = nodes / t;
    const double step = 2.0 * std::numbers::pi / nodes;
    ContourSum out;
    // Nodes with theta > 0; the mirrored half contributes the conjugate.
    for (int k = nodes / 2; k < nodes; ++k) {
        const double theta = -std::numbers::pi + (k + 0.5) * step;
        const double arg = kTalbotAlpha * theta;
        const double sn = std::sin(arg);
        const double cot = std::cos(arg) / sn;
        const Complex s = shift + scale * Complex(-kTalbotSigma + kTalbotMu * theta * cot, kTalbotNu * theta);
        const Complex ds =
            scale * Complex(kTalbotMu * cot - kTalbotMu * kTalbotAlpha * theta / (sn * sn), kTalbotNu);
        const Complex g = std::exp(s * t) * transform(s) * ds;
        out.value += g.imag();
        out.magnitude += std::abs(g);
    }
    out.value *= 2.0 / nodes;
    out.magnitude *= 2.0 / nodes;
    return out;
}

template <class G>
void check_conjugate_symmetry(const G& transform, Complex probe) {
    const Complex upper = transform(probe);
    const Complex lower = transform(std::conj(probe));
    const double mismatch = std::abs(lower - std::conj(upper));
    if (mismatch > 1e-13 * std::max(std::abs(upper), std::numeric_limits<double>::min())) {
        throw Error("transform is not conjugate-symmetric: F(conj s) != conj F(s)");
    }
}

// Real saddle point of s t + log|G(s)| to the right of `start`, or `start`
// itself when the exponent already increases there. Deep in the left tail of
// a high-order transform the saddle lies far right of the default crossing;
// moving the contour there keeps the summed terms comparable to the result.
template <class G>
double talbot_saddle(const G& transform, double t, double start) {
    auto phase = [&](double s) { return s * t + std::log(std::abs(transform(Complex(s, 0.0)))); };
    const double f0 = phase(start);
    if (!std::isfinite(f0) || !(phase(start * 1.001) < f0)) return start;
    double lo = start;
    double mid = 2.0 * start;
    double fmid = phase(mid);
    if (!(fmid < f0)) {
        mid = 1.001 * start;
        fmid = phase(mid);
    }
    double hi = 2.0 * mid;
    double fhi = phase(hi);
    for (int i = 0; i < 200 && fhi < fmid && std::isfinite(fhi); ++i) {
        lo = mid;
        mid = hi;
        fmid = fhi;
        hi *= 2.0;
        fhi = phase(hi);
    }
    // Golden-section refinement; a rough location is enough.
    constexpr double kGolden = 0.3819660112501051;
    for (int i = 0; i < 60 && (hi - lo) > 1e-3 * mid; ++i) {
        const bool right = (hi - mid) > (mid - lo);
        const double probe = right ? mid + kGolden * (hi - mid) : mid - kGolden * (mid - lo);
        const double fp = phase(probe);
        if (fp < fmid) {
            (right ? lo : hi) = mid;
            mid = probe;
            fmid = fp;
        } else {
            (right ? hi : lo) = probe;
        }
    }
    return mid;
}

template <class G>
EvalResult talbot_invert(const G& transform, const TransformFn& meta, double t, const InversionConfig& cfg) {
    if (meta.sigma_max > 0.0) {
        throw ContourCrossesSingularity("fixed Talbot contour requires singularities with Re(s) <= 0");
    }
    if (meta.branch_point) {
        const double crossing = talbot_crossing(cfg.max_nodes, t);
        if (crossing >= *meta.branch_point) {
            throw ContourCrossesSingularity("Talbot contour crosses the real axis at " + detail::num(crossing) +
                                            ", beyond the branch point " + detail::num(*meta.branch_point));
        }
    }
    check_conjugate_symmetry(transform, Complex(talbot_crossing(cfg.nodes, t), 1.0 / t));

    const double saddle = talbot_saddle(transform, t, talbot_crossing(cfg.nodes, t));
    auto shift_for = [&](int n) {
        const double shift = std::max(0.0, saddle - talbot_crossing(n, t));
        if (meta.branch_point && shift + talbot_crossing(n, t) >= *meta.branch_point) {
            throw ContourCrossesSingularity("shifted Talbot contour would cross the branch point");
        }
        return shift;
    };

    EvalResult best{0.0, std::numeric_limits<double>::infinity(), false};
    int nodes = cfg.nodes;
    ContourSum coarse = talbot_sum(transform, t, nodes, shift_for(nodes));
    while (2 * nodes <= cfg.max_nodes) {
        const ContourSum fine = talbot_sum(transform, t, 2 * nodes, shift_for(2 * nodes));
        const double err = 2.0 * std::abs(coarse.value - fine.value) + 4.0 * std::numeric_limits<double>::epsilon() * fine.magnitude;
        if (err < best.abs_err_est) best = {coarse.value, err, false};
        if (err <= cfg.tolerance_for(coarse.value)) {
            return {coarse.value, err, true};
        }
        coarse = fine;
        nodes *= 2;
    }
    if (cfg.throw_on_failure) {
        throw ConvergenceFailure("Talbot inversion did not reach tolerance (estimate " +
                                     detail::num(best.abs_err_est) + ")",
                                 best.abs_err_est);
    }
    return best;
}

// (e^{cy} / pi) * integral_0^inf Re[G(c + i w) e^{i w y}] dw, integrated one
// half-period at a time and summed with epsilon extrapolation.
template <class G>
std::pair<double, double> vertical_oscillatory(const G& transform, double t, double c, double singular_distance,
                                               int gl_nodes, double tol) {
    const quad::GaussLegendre rule(gl_nodes);
    const double half_period = std::numbers::pi / t;
    const int sub = std::max(1, static_cast<int>(std::ceil(half_period / singular_distance)));
    const double width = half_period / sub;
    auto integrand = [&](double w) {
        const Complex s(c, w);
        return (transform(s) * std::exp(Complex(0.0, w * t))).real();
    };
    std::vector<double> partial;
    double running = 0.0;
    std::pair<double, double> estimate{0.0, std::numeric_limits<double>::infinity()};
    constexpr int kMaxPanels = 600;
    for (int panel = 0; panel < kMaxPanels; ++panel) {
        for (int j = 0; j < sub; ++j) {
            const double a = panel * half_period + j * width;
            running += rule.integrate(integrand, a, a + width);
        }
        partial.push_back(running);
        if (panel >= 12 && panel % 6 == 5) {
            // Extrapolate from the most recent stretch only; early panels
            // carry the non-oscillatory part.
            const std::size_t window = std::min<std::size_t>(partial.size(), 60);
            std::vector<double> tail(partial.end() - window, partial.end());
            estimate = quad::wynn_epsilon(tail);
            if (estimate.second * std::exp(c * t) / std::numbers::pi < 0.1 * tol) break;
        }
    }
    const double factor = std::exp(c * t) / std::numbers::pi;
    return {estimate.first * factor, estimate.second * factor};
}

template <class G>
EvalResult vertical_invert(const G& transform, const TransformFn& meta, double t, const InversionConfig& cfg,
                           bool pole_at_origin) {
    const double leftmost = pole_at_origin ? std::max(meta.sigma_max, 0.0) : meta.sigma_max;
    double c = cfg.abscissa;
    if (!std::isfinite(c)) c = std::max(leftmost, 0.0) + 1.0 / t;
    if (!(c > leftmost)) {
        throw InvalidAbscissa("vertical line must lie right of every singularity (c = " + detail::num(c) + ")");
    }
    if (meta.branch_point && c >= *meta.branch_point) {
        throw InvalidAbscissa("vertical line must lie left of the branch point");
    }
    const double tol = cfg.target_abs_tol;
    const auto coarse = vertical_oscillatory(transform, t, c, c - leftmost, cfg.nodes, tol);
    const auto fine = vertical_oscillatory(transform, t, c, c - leftmost, 2 * cfg.nodes, tol);
    const double err = std::abs(coarse.first - fine.first) + std::max(coarse.second, fine.second);
    const bool ok = err <= cfg.tolerance_for(fine.first);
    if (!ok && cfg.throw_on_failure) {
        throw ConvergenceFailure("vertical-line inversion did not reach tolerance (estimate " + detail::num(err) +
                                     ")",
                                 err);
    }
    return {fine.first, err, ok};
}

template <class G>
EvalResult invert_with(const G& transform, const TransformFn& meta, double t, const InversionConfig& cfg,
                       bool pole_at_origin) {
    if (cfg.method == ContourMethod::FixedTalbot) return talbot_invert(transform, meta, t, cfg);
    return vertical_invert(transform, meta, t, cfg, pole_at_origin);
}

}  // namespace detail

/// (1 / 2 pi i) integral over a Bromwich contour of F(s) e^{sy} ds.
inline EvalResult invert_at(const TransformFn& F, double y, const InversionConfig& cfg = {}) {
    validate_config(cfg);
    if (!(y > 0.0) || !std::isfinite(y)) throw ParameterOutOfRange("y", y, "(0, inf)");
    return detail::invert_with(F, F, y, cfg, false);
}

/// Below this fraction of F.scale the scaled inversion reports 0 with a
/// monotonicity bound as its error.
inline constexpr double kDegenerateFraction = 1e-8;

/// Inverse transform of F(s) / s, i.e. the running integral of the inverse of F.
inline EvalResult invert_scaled_at(const TransformFn& F, double y, const InversionConfig& cfg = {}) {
    validate_config(cfg);
    if (!(y >= 0.0) || std::isnan(y)) throw ParameterOutOfRange("y", y, "[0, inf)");
    if (y == 0.0) return {0.0, 0.0, true};
    auto scaled = [&F](Complex s) { return F(s) / s; };
    const double floor_y = kDegenerateFraction * F.scale;
    if (y < floor_y) {
        // The target is a CDF-type quantity: non-decreasing and zero at the origin.
        InversionConfig relaxed = cfg;
        relaxed.throw_on_failure = false;
        const EvalResult at_floor = detail::invert_with(scaled, F, floor_y, relaxed, true);
        return {0.0, std::max(at_floor.value, 0.0) + at_floor.abs_err_est, true};
    }
    return detail::invert_with(scaled, F, y, cfg, true);
}

/// Weight multiplying F(s) along a vertical contour.
struct VerticalWeight {
    enum class Kind { None, OneOverS, BpskKernel };

    Kind kind = Kind::None;
    double p = 0.0;
    double q = 0.0;

    static VerticalWeight none() { return {}; }
    static VerticalWeight one_over_s() { return {Kind::OneOverS, 0.0, 0.0}; }
    /// (1 - s / q)^{-p} / s, the transform of the unified conditional error kernel.
    static VerticalWeight bpsk_kernel(double p, double q) {
        if (!(p > 0.0)) throw ParameterOutOfRange("p", p, "(0, inf)");
        if (!(q > 0.0)) throw ParameterOutOfRange("q", q, "(0, inf)");
        return {Kind::BpskKernel, p, q};
    }

    Complex operator()(Complex s) const {
        switch (kind) {
            case Kind::None:
                return 1.0;
            case Kind::OneOverS:
                return 1.0 / s;
            case Kind::BpskKernel:
                return principal_power(1.0 - s / q, -p) / s;
        }
        return 1.0;
    }

    double decay() const {
        switch (kind) {
            case Kind::None:
                return 0.0;
            case Kind::OneOverS:
                return 1.0;
            case Kind::BpskKernel:
                return 1.0 + p;
        }
        return 0.0;
    }
};

/// (1 / 2 pi i) integral_{c - i inf}^{c + i inf} F(s) w(s) ds.
///
/// The integrand is not damped by an exponential, so the infinite line is
/// truncated where the algebraic tail bound drops below the tolerance.
inline EvalResult integrate_vertical(const TransformFn& F, const VerticalWeight& weight,
                                     const InversionConfig& cfg = {}) {
    validate_config(cfg);
    const double total_decay = F.decay + weight.decay();
    if (!(total_decay > 1.0)) {
        throw ConvergenceFailure("vertical integrand decays too slowly (exponent " + detail::num(total_decay) + ")",
                                 std::numeric_limits<double>::infinity());
    }
    double leftmost = F.sigma_max;
    double rightmost = F.branch_point.value_or(std::numeric_limits<double>::infinity());
    if (weight.kind != VerticalWeight::Kind::None) leftmost = std::max(leftmost, 0.0);
    if (weight.kind == VerticalWeight::Kind::BpskKernel) rightmost = std::min(rightmost, weight.q);

    double c = cfg.abscissa;
    if (!std::isfinite(c)) {
        if (weight.kind == VerticalWeight::Kind::BpskKernel) {
            c = 0.5 * weight.q;
        } else if (std::isfinite(rightmost)) {
            c = 0.5 * (leftmost + rightmost);
        } else {
            c = leftmost + 1.0;
        }
    }
    if (!(c > leftmost) || !(c < rightmost)) {
        throw InvalidAbscissa("abscissa " + detail::num(c) + " outside (" + detail::num(leftmost) + ", " +
                              detail::num(rightmost) + ")");
    }

    auto full = [&](double w) { return F(Complex(c, w)) * weight(Complex(c, w)); };
    auto real_part = [&](double w) { return full(w).real(); };

    const double distance = std::min(c - leftmost, rightmost - c);
    const double knee = std::max({1.0, 4.0 * std::abs(c), 4.0 / distance});
    const double tol = cfg.target_abs_tol;
    const double quad_tol = 0.25 * std::numbers::pi * tol;
    const double quad_rel = 0.25 * cfg.target_rel_tol;

    quad::QuadResult head = quad::integrate(real_part, 0.0, knee, quad_tol, quad_rel);
    double value = head.value;
    double err = head.abs_err;
    bool quad_ok = head.converged;

    // Beyond the knee integrate in log(w); extend until the tail bound is met.
    double lower = knee;
    double upper = knee * 1e3;
    double tail = std::numeric_limits<double>::infinity();
    constexpr double kMaxFrequency = 1e40;
    while (true) {
        const double log_lo = std::log(lower);
        auto mapped = [&](double v) {
            const double w = std::exp(v);
            return real_part(w) * w;
        };
        const quad::QuadResult piece = quad::integrate(mapped, log_lo, std::log(upper), quad_tol, quad_rel);
        value += piece.value;
        err += piece.abs_err;
        quad_ok = quad_ok && piece.converged;
        double envelope = 0.0;
        for (double frac : {0.25, 0.5, 0.75, 1.0}) {
            const double w = upper * frac;
            envelope = std::max(envelope, std::abs(full(w)) * std::pow(w, total_decay));
        }
        tail = envelope * std::pow(upper, 1.0 - total_decay) / (total_decay - 1.0);
        if (tail <= 0.25 * std::numbers::pi * cfg.tolerance_for(value / std::numbers::pi) || upper >= kMaxFrequency) {
            break;
        }
        lower = upper;
        upper *= 1e3;
    }
    const double result = value / std::numbers::pi;
    const double result_err = (err + tail) / std::numbers::pi;
    const bool ok = quad_ok && result_err <= cfg.tolerance_for(result);
    if (!ok && cfg.throw_on_failure) {
        throw ConvergenceFailure("vertical-line integral did not reach tolerance (estimate " +
                                     detail::num(result_err) + ")",
                                 result_err);
    }
    return {result, result_err, ok};
}

}  // namespace etamu
