#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "etamu/errors.hpp"
#include "etamu/fading_params.hpp"
#include "etamu/modulation.hpp"
#include "etamu/specfun.hpp"

// Validation machinery. Nothing here reaches the contour engine or any
// complex-valued routine.

namespace etamu {

/// Reproducible random stream. The engine is a 64-bit Mersenne twister seeded
/// from (seed, stream_index, substream); all variate transforms are local so
/// the sequence does not depend on the standard library implementation.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_index = 0, std::uint64_t substream = 0)
        : seed_(seed), stream_(stream_index), substream_(substream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_index), static_cast<std::uint32_t>(stream_index >> 32),
                          static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_index() const noexcept { return stream_; }

    /// Independent child stream, used to split work into fixed-size chunks.
    RngStream substream(std::uint64_t j) const { return RngStream(seed_, stream_, substream_ * 0x9E3779B97F4A7C15ull + j + 1); }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal (Marsaglia polar method).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, r2;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            r2 = u * u + v * v;
        } while (r2 >= 1.0 || r2 == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(r2) / r2);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

    /// Gamma(shape, scale) by Marsaglia-Tsang; shapes below 1 are boosted by
    /// one and corrected with U^{1/shape}.
    double gamma(double shape, double scale) {
        if (!(shape > 0.0)) throw NonPositiveShape("gamma variate: shape must be positive");
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0, 1.0);
            return scale * std::exp(std::log(g) + std::log(uniform()) / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        while (true) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return scale * d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return scale * d * v;
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t substream_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// One squared eta-mu draw as Gamma(mu, a) + Gamma(mu, b).
inline double sample_branch(const FadingBranch& branch, RngStream& rng) {
    const DerivedConstants c = derive_constants(branch);
    return rng.gamma(branch.mu, c.a) + rng.gamma(branch.mu, c.b);
}

/// One squared eta-mu draw from the cluster model: 2 mu clusters, each with
/// independent in-phase and quadrature Gaussian components.
inline double sample_branch_clusters(const FadingBranch& branch, RngStream& rng) {
    validate_branch(branch);
    if (branch.format != FadingFormat::Format1) {
        throw NonIntegerClusterCount("cluster sampler is defined for format 1 only");
    }
    const double clusters = 2.0 * branch.mu;
    if (clusters != std::round(clusters) || clusters < 1.0) {
        throw NonIntegerClusterCount("2 mu = " + std::to_string(clusters) + " is not a positive integer");
    }
    const double eta = branch.eta;
    const double sx = std::sqrt(branch.mean_snr * eta / (clusters * (1.0 + eta)));
    const double sy = std::sqrt(branch.mean_snr / (clusters * (1.0 + eta)));
    double total = 0.0;
    for (int i = 0; i < static_cast<int>(clusters); ++i) {
        const double x = sx * rng.normal();
        const double y = sy * rng.normal();
        total += x * x + y * y;
    }
    return total;
}

/// Draws are generated in chunks of this size, chunk j from substream j.
inline constexpr std::size_t kSampleChunk = 65536;

/// n draws of the combiner output in a fixed order, independent of `threads`.
inline std::vector<double> draw_mrc_samples(const MrcChannel& channel, std::size_t n, const RngStream& rng,
                                            unsigned threads = 1) {
    if (n < 1) throw ParameterOutOfRange("n", 0.0, "[1, inf)");
    std::vector<double> out(n);
    const std::size_t chunks = (n + kSampleChunk - 1) / kSampleChunk;
    std::vector<double> shapes;
    std::vector<double> scales_a;
    std::vector<double> scales_b;
    for (std::size_t l = 0; l < channel.size(); ++l) {
        shapes.push_back(channel.branch(l).mu);
        scales_a.push_back(channel.constant(l).a);
        scales_b.push_back(channel.constant(l).b);
    }
    auto fill = [&](std::size_t chunk) {
        RngStream local = rng.substream(chunk);
        const std::size_t begin = chunk * kSampleChunk;
        const std::size_t end = std::min(n, begin + kSampleChunk);
        for (std::size_t i = begin; i < end; ++i) {
            double y = 0.0;
            for (std::size_t l = 0; l < shapes.size(); ++l) {
                y += local.gamma(shapes[l], scales_a[l]) + local.gamma(shapes[l], scales_b[l]);
            }
            out[i] = y;
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));
    if (threads == 1) {
        for (std::size_t c = 0; c < chunks; ++c) fill(c);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t c = t; c < chunks; c += threads) fill(c);
            });
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

struct EmpiricalSummary {
    std::size_t n = 0;
    double mean = 0.0;
    /// Unbiased sample variance (0 when n = 1).
    double variance = 0.0;
    std::vector<double> sorted_samples;

    /// Fraction of samples <= y.
    double ecdf(double y) const {
        const auto it = std::upper_bound(sorted_samples.begin(), sorted_samples.end(), y);
        return static_cast<double>(it - sorted_samples.begin()) / static_cast<double>(n);
    }

    /// Fraction of samples in [lo, hi) divided by the bin width.
    double histogram_density(double lo, double hi) const {
        const auto a = std::lower_bound(sorted_samples.begin(), sorted_samples.end(), lo);
        const auto b = std::lower_bound(sorted_samples.begin(), sorted_samples.end(), hi);
        return static_cast<double>(b - a) / (static_cast<double>(n) * (hi - lo));
    }
};

/// Mean and unbiased variance, accumulated chunk by chunk in a fixed order.
inline std::pair<double, double> mean_and_variance(const std::vector<double>& xs) {
    double count = 0.0;
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t begin = 0; begin < xs.size(); begin += kSampleChunk) {
        const std::size_t end = std::min(xs.size(), begin + kSampleChunk);
        double c_mean = 0.0;
        for (std::size_t i = begin; i < end; ++i) c_mean += xs[i];
        const double c_n = static_cast<double>(end - begin);
        c_mean /= c_n;
        double c_m2 = 0.0;
        for (std::size_t i = begin; i < end; ++i) c_m2 += (xs[i] - c_mean) * (xs[i] - c_mean);
        const double total = count + c_n;
        const double delta = c_mean - mean;
        mean += delta * c_n / total;
        m2 += c_m2 + delta * delta * count * c_n / total;
        count = total;
    }
    return {mean, count > 1.0 ? m2 / (count - 1.0) : 0.0};
}

inline EmpiricalSummary summarize(std::vector<double> samples) {
    EmpiricalSummary s;
    s.n = samples.size();
    if (s.n == 0) throw ParameterOutOfRange("n", 0.0, "[1, inf)");
    const auto [mean, var] = mean_and_variance(samples);
    s.mean = mean;
    s.variance = var;
    std::sort(samples.begin(), samples.end());
    s.sorted_samples = std::move(samples);
    return s;
}

inline EmpiricalSummary simulate_mrc(const MrcChannel& channel, std::size_t n, const RngStream& rng,
                                     unsigned threads = 1) {
    return summarize(draw_mrc_samples(channel, n, rng, threads));
}

struct BerEstimate {
    double estimate = 0.0;
    double std_err = 0.0;
};

/// Rao-Blackwellized BER: the sample mean of conditional_ber over the draws.
inline BerEstimate empirical_ber(const ModulationScheme& mod, const std::vector<double>& samples) {
    std::vector<double> cb(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) cb[i] = conditional_ber(mod, samples[i]);
    const auto [mean, var] = mean_and_variance(cb);
    return {mean, std::sqrt(var / static_cast<double>(cb.size()))};
}

inline BerEstimate empirical_ber(const MrcChannel& channel, const ModulationScheme& mod, std::size_t n,
                                 const RngStream& rng, unsigned threads = 1) {
    return empirical_ber(mod, draw_mrc_samples(channel, n, rng, threads));
}

/// Shapes and scales of the 2L gamma variates whose sum is the combiner output.
struct GammaDecomposition {
    std::vector<double> shapes;
    std::vector<double> scales;
};

inline GammaDecomposition gamma_decomposition(const MrcChannel& channel) {
    GammaDecomposition g;
    for (std::size_t l = 0; l < channel.size(); ++l) {
        const double mu = channel.branch(l).mu;
        g.shapes.insert(g.shapes.end(), {mu, mu});
        g.scales.insert(g.scales.end(), {channel.constant(l).a, channel.constant(l).b});
    }
    return g;
}

/// Largest admissible truncation bound for the series below.
inline constexpr double kSeriesTruncation = 1e-12;

/// Density and distribution of a sum of independent gamma variates as a
/// mixture of Gamma(rho + k, theta_min) laws, rho the total shape, with
/// weights C * delta_k from the Moschopoulos recursion.
class GammaSumSeries {
public:
    GammaSumSeries(std::vector<double> shapes, std::vector<double> scales, std::size_t max_terms = 20000)
        : shapes_(std::move(shapes)), scales_(std::move(scales)), max_terms_(max_terms) {
        if (shapes_.empty() || shapes_.size() != scales_.size()) {
            throw ParameterOutOfRange("shapes", static_cast<double>(shapes_.size()),
                                      "non-empty and the same length as scales");
        }
        for (std::size_t i = 0; i < shapes_.size(); ++i) {
            if (!(shapes_[i] > 0.0) || !std::isfinite(shapes_[i])) throw ParameterOutOfRange("shape", shapes_[i], "(0, inf)");
            if (!(scales_[i] > 0.0) || !std::isfinite(scales_[i])) throw ParameterOutOfRange("scale", scales_[i], "(0, inf)");
        }
        theta1_ = *std::min_element(scales_.begin(), scales_.end());
        double log_c = 0.0;
        for (std::size_t i = 0; i < shapes_.size(); ++i) {
            rho_ += shapes_[i];
            ratio_.push_back(1.0 - theta1_ / scales_[i]);
            log_c += shapes_[i] * std::log(theta1_ / scales_[i]);
        }
        weights_.push_back(std::exp(log_c));
    }

    double total_shape() const noexcept { return rho_; }
    double min_scale() const noexcept { return theta1_; }

    double pdf(double y) {
        if (!(y > 0.0) || !std::isfinite(y)) throw ParameterOutOfRange("y", y, "(0, inf)");
        return sum_series(y, [this](double shape, double x) { return gamma_pdf(shape, x); });
    }

    double cdf(double y) {
        if (!(y >= 0.0) || std::isnan(y)) throw ParameterOutOfRange("y", y, "[0, inf)");
        if (y == 0.0) return 0.0;
        return sum_series(y, [](double shape, double x) { return regularized_gamma_p(shape, x); });
    }

private:
    // Gamma(shape, theta1) density at y, with x = y / theta1.
    double gamma_pdf(double shape, double x) const {
        return std::exp((shape - 1.0) * std::log(x) - x - detail::lgamma_real(shape)) / theta1_;
    }

    void extend() {
        const std::size_t k = weights_.size();  // computing delta_k
        double g = 0.0;
        for (std::size_t i = 0; i < ratio_.size(); ++i) g += shapes_[i] * std::pow(ratio_[i], static_cast<double>(k));
        gammas_.push_back(g / static_cast<double>(k));
        // delta_k = (1/k) sum_{i=1}^{k} i gamma_i delta_{k-i}, carried on the weights.
        double s = 0.0;
        for (std::size_t i = 1; i <= k; ++i) s += static_cast<double>(i) * gammas_[i - 1] * weights_[k - i];
        weights_.push_back(s / static_cast<double>(k));
    }

    template <class Term>
    double sum_series(double y, Term term) {
        const double x = y / theta1_;
        double total = 0.0;
        double partial = 0.0;
        for (std::size_t k = 0; k < max_terms_; ++k) {
            if (k >= weights_.size()) extend();
            partial += weights_[k];
            total += weights_[k] * term(rho_ + static_cast<double>(k), x);
            // Past shape x both the density and the distribution terms decrease
            // in the shape, so the unused weight times the next term bounds the rest.
            const double next_shape = rho_ + static_cast<double>(k) + 1.0;
            if (next_shape > x) {
                const double remaining = std::max(0.0, 1.0 - partial);
                if (remaining * term(next_shape, x) <= kSeriesTruncation) return total;
            }
        }
        throw TruncationBoundNotMet("gamma-sum series did not reach its truncation bound within " +
                                    std::to_string(max_terms_) + " terms");
    }

    std::vector<double> shapes_;
    std::vector<double> scales_;
    std::size_t max_terms_;
    double theta1_ = 1.0;
    double rho_ = 0.0;
    std::vector<double> ratio_;
    std::vector<double> gammas_;
    std::vector<double> weights_;
};

inline double gamma_sum_pdf(const std::vector<double>& shapes, const std::vector<double>& scales, double y) {
    GammaSumSeries series(shapes, scales);
    return series.pdf(y);
}

inline double gamma_sum_cdf(const std::vector<double>& shapes, const std::vector<double>& scales, double y) {
    GammaSumSeries series(shapes, scales);
    return series.cdf(y);
}

/// Kolmogorov-Smirnov distance between sorted samples and a continuous CDF.
inline double ks_distance(const std::vector<double>& sorted, const std::function<double(double)>& cdf) {
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Upper bound on the KS distance using the CDF only at the sorted `grid`
/// points. On [g_j, g_{j+1}] monotonicity of both functions gives
/// sup |F_n - F| <= max(F_n(g_{j+1}-) - F(g_j), F(g_{j+1}) - F_n(g_j)).
/// The grid must cover every sample.
inline double ks_distance_grid_bound(const std::vector<double>& sorted, const std::vector<double>& grid,
                                     const std::vector<double>& cdf_at_grid) {
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const auto lo = std::upper_bound(sorted.begin(), sorted.end(), grid[j]) - sorted.begin();
        const auto hi_minus = std::lower_bound(sorted.begin(), sorted.end(), grid[j + 1]) - sorted.begin();
        const double fn_lo = static_cast<double>(lo) / n;
        const double fn_hi = static_cast<double>(hi_minus) / n;
        d = std::max({d, fn_hi - cdf_at_grid[j], cdf_at_grid[j + 1] - fn_lo});
    }
    return d;
}

/// Two-sample KS statistic between sorted samples.
inline double ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
inline double ks_critical_99(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

/// Asymptotic 1% critical value of the two-sample KS statistic.
inline double ks_critical_99(std::size_t n, std::size_t m) {
    const double dn = static_cast<double>(n);
    const double dm = static_cast<double>(m);
    return 1.628 * std::sqrt((dn + dm) / (dn * dm));
}

}  // namespace etamu
