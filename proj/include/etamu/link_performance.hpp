#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "etamu/errors.hpp"
#include "etamu/etamu_stats.hpp"
#include "etamu/fading_params.hpp"
#include "etamu/laplace_inversion.hpp"
#include "etamu/modulation.hpp"
#include "etamu/quadrature.hpp"
#include "etamu/specfun.hpp"

namespace etamu {

/// Probability that the combiner output SNR falls below y_th.
inline EvalResult outage(const MrcChannel& channel, double y_th, const InversionConfig& cfg = {}) {
    return cdf_sum(channel, y_th, cfg);
}

namespace detail {

// Panel edges on [lo, hi]: geometric towards lo = 0 to resolve a power-law
// density at the origin, and uniform across the bulk.
inline std::vector<double> ber_breakpoints(double lo, double hi) {
    std::vector<double> pts;
    constexpr int kUniform = 16;
    for (int j = 0; j <= kUniform; ++j) pts.push_back(lo + (hi - lo) * j / kUniform);
    if (lo == 0.0) {
        double x = hi / kUniform;
        for (int k = 0; k < 40; ++k) {
            x *= 0.5;
            pts.push_back(x);
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace detail

/// Average BER by adaptive quadrature of conditional_ber * pdf_sum over
/// (0, Y_max). Y_max doubles until conditional_ber(Y_max) * (1 - cdf(Y_max))
/// is below a tenth of the tolerance. The error estimate adds the quadrature
/// error, the integral of conditional_ber times the pointwise density error,
/// and the tail bound.
inline EvalResult avg_ber_quadrature(const MrcChannel& channel, const ModulationScheme& mod,
                                     const InversionConfig& cfg = {}) {
    validate_config(cfg);
    mod.validate();
    InversionConfig point_cfg = cfg;
    point_cfg.throw_on_failure = false;

    auto integrand = [&](double y) {
        const double cb = conditional_ber(mod, y);
        if (cb == 0.0) return std::pair<double, double>(0.0, 0.0);
        const EvalResult f = pdf_sum(channel, y, point_cfg);
        return std::pair<double, double>(cb * f.value, cb * f.abs_err_est);
    };

    const double abs_tol = 0.5 * cfg.target_abs_tol;
    const double rel_tol = 0.5 * cfg.target_rel_tol;
    double hi = 4.0 * channel.mean();
    quad::QuadResult body = quad::integrate_pair(integrand, detail::ber_breakpoints(0.0, hi), abs_tol, rel_tol);
    double value = body.value;
    double quad_err = body.abs_err;
    double pdf_err = body.aux;
    bool quad_ok = body.converged;

    double tail = 0.5;
    for (int doubling = 0; doubling < 60; ++doubling) {
        const EvalResult c = cdf_sum(channel, hi, point_cfg);
        const double survival = std::min(1.0, std::max(0.0, 1.0 - c.value) + c.abs_err_est);
        tail = conditional_ber(mod, hi) * survival;
        if (tail <= 0.1 * cfg.tolerance_for(value)) break;
        const quad::QuadResult piece =
            quad::integrate_pair(integrand, detail::ber_breakpoints(hi, 2.0 * hi), abs_tol, rel_tol);
        value += piece.value;
        quad_err += piece.abs_err;
        pdf_err += piece.aux;
        quad_ok = quad_ok && piece.converged;
        hi *= 2.0;
    }
    const double err = quad_err + pdf_err + tail;
    const bool ok = quad_ok && err <= cfg.tolerance_for(value);
    if (!ok && cfg.throw_on_failure) {
        throw ConvergenceFailure("average BER quadrature did not reach tolerance (estimate " + std::to_string(err) +
                                     ")",
                                 err);
    }
    return {value, err, ok};
}

/// Average BER as a single vertical-line integral of the MGF against the
/// transform of the conditional error kernel, (1 - s/q)^{-p} / s.
inline EvalResult avg_ber_contour(const MrcChannel& channel, const ModulationScheme& mod,
                                  const InversionConfig& cfg = {}) {
    mod.validate();
    InversionConfig raw_cfg = cfg;
    raw_cfg.target_abs_tol = 2.0 * cfg.target_abs_tol;
    const EvalResult raw =
        integrate_vertical(mgf_transform(channel), VerticalWeight::bpsk_kernel(mod.p, mod.q), raw_cfg);
    return {0.5 * raw.value, 0.5 * raw.abs_err_est, raw.converged};
}

struct BerPoint {
    double mean_snr_db = 0.0;
    double ber = 0.5;
    double abs_err_est = 0.0;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Average BER at each per-branch mean SNR (dB) of the grid, with the fading
/// shape of `channel_template`. Points are independent; `threads` > 1 spreads
/// them over worker threads without changing any result.
inline std::vector<BerPoint> ber_curve(const MrcChannel& channel_template, const ModulationScheme& mod,
                                       const std::vector<double>& snr_db_grid, const InversionConfig& cfg = {},
                                       unsigned threads = 1) {
    for (double db : snr_db_grid) {
        if (!std::isfinite(db)) throw ParameterOutOfRange("snr_db", db, "finite");
    }
    std::vector<BerPoint> out(snr_db_grid.size());
    std::vector<std::exception_ptr> failures(snr_db_grid.size());
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t i = first; i < snr_db_grid.size(); i += stride) {
            try {
                const double db = snr_db_grid[i];
                const MrcChannel ch = channel_template.with_mean_snr(db_to_linear(db));
                const EvalResult r = avg_ber_quadrature(ch, mod, cfg);
                out[i] = {db, r.value, r.abs_err_est};
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(snr_db_grid.size())));
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    return out;
}

}  // namespace etamu
