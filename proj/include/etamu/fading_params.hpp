#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "etamu/errors.hpp"

namespace etamu {

/// Parameterization of the eta parameter.
///
/// Format1: eta is the in-phase/quadrature scattered power ratio, 0 < eta < inf.
/// Format2: eta is the in-phase/quadrature power correlation, -1 < eta < 1.
enum class FadingFormat { Format1, Format2 };

inline const char* to_string(FadingFormat f) { return f == FadingFormat::Format1 ? "format1" : "format2"; }

/// One eta-mu diversity branch. All quantities are dimensionless; mean_snr is linear.
struct FadingBranch {
    FadingFormat format = FadingFormat::Format1;
    double eta = 1.0;
    double mu = 1.0;
    double mean_snr = 1.0;
};

/// Constants shared by every expression for a branch.
///
/// The branch SNR is the sum of two independent Gamma(mu, a) and Gamma(mu, b)
/// variates, so mu * (a + b) equals the branch mean SNR.
struct DerivedConstants {
    double h = 1.0;
    double bigH = 0.0;
    double a = 0.5;
    double b = 0.5;
};

/// Throws ParameterOutOfRange unless every branch invariant holds.
inline FadingBranch validate_branch(const FadingBranch& candidate) {
    if (candidate.format == FadingFormat::Format1) {
        if (!(candidate.eta > 0.0) || !std::isfinite(candidate.eta)) {
            throw ParameterOutOfRange("eta", candidate.eta, "(0, inf) for format 1");
        }
    } else {
        if (!(candidate.eta > -1.0 && candidate.eta < 1.0)) {
            throw ParameterOutOfRange("eta", candidate.eta, "(-1, 1) for format 2");
        }
    }
    if (!(candidate.mu > 0.0) || !std::isfinite(candidate.mu)) {
        throw ParameterOutOfRange("mu", candidate.mu, "(0, inf)");
    }
    if (!(candidate.mean_snr > 0.0) || !std::isfinite(candidate.mean_snr)) {
        throw ParameterOutOfRange("mean_snr", candidate.mean_snr, "(0, inf)");
    }
    return candidate;
}

/// Re-expresses the branch in the other format using the bilinear map
/// eta' = (1 - eta) / (1 + eta), which is its own inverse.
inline FadingBranch convert_format(const FadingBranch& branch) {
    FadingBranch out = validate_branch(branch);
    out.eta = (1.0 - branch.eta) / (1.0 + branch.eta);
    out.format = branch.format == FadingFormat::Format1 ? FadingFormat::Format2 : FadingFormat::Format1;
    return out;
}

inline DerivedConstants derive_constants(const FadingBranch& branch) {
    validate_branch(branch);
    const double eta = branch.eta;
    DerivedConstants c;
    // h - H and h + H are formed directly from eta so that a and b keep full
    // relative precision when |H| is close to h.
    double h_minus_H = 0.0;
    double h_plus_H = 0.0;
    if (branch.format == FadingFormat::Format1) {
        c.h = (2.0 + 1.0 / eta + eta) / 4.0;
        c.bigH = (1.0 / eta - eta) / 4.0;
        h_minus_H = (1.0 + eta) / 2.0;
        h_plus_H = (1.0 + 1.0 / eta) / 2.0;
    } else {
        const double denom = (1.0 - eta) * (1.0 + eta);
        c.h = 1.0 / denom;
        c.bigH = eta / denom;
        h_minus_H = 1.0 / (1.0 + eta);
        h_plus_H = 1.0 / (1.0 - eta);
    }
    if (!(h_minus_H > 0.0) || !(h_plus_H > 0.0) || !std::isfinite(h_minus_H) || !std::isfinite(h_plus_H) ||
        !std::isfinite(c.h)) {
        throw DegenerateParameters("h - H or h + H is not a positive finite number for eta = " +
                                   std::to_string(eta));
    }
    c.a = branch.mean_snr / (2.0 * branch.mu * h_minus_H);
    c.b = branch.mean_snr / (2.0 * branch.mu * h_plus_H);
    if (!(c.a > 0.0) || !(c.b > 0.0) || !std::isfinite(c.a) || !std::isfinite(c.b)) {
        throw DegenerateParameters("scale constants underflow or overflow for eta = " + std::to_string(eta));
    }
    return c;
}

/// Ordered set of L >= 1 independent branches feeding a maximal-ratio combiner.
class MrcChannel {
public:
    explicit MrcChannel(std::vector<FadingBranch> branches) : branches_(std::move(branches)) {
        if (branches_.empty()) {
            throw ParameterOutOfRange("branches", 0.0, "L >= 1");
        }
        constants_.reserve(branches_.size());
        for (const auto& b : branches_) {
            constants_.push_back(derive_constants(b));
        }
    }

    MrcChannel(std::initializer_list<FadingBranch> branches)
        : MrcChannel(std::vector<FadingBranch>(branches)) {}

    std::size_t size() const noexcept { return branches_.size(); }
    const std::vector<FadingBranch>& branches() const noexcept { return branches_; }
    const std::vector<DerivedConstants>& constants() const noexcept { return constants_; }
    const FadingBranch& branch(std::size_t i) const { return branches_.at(i); }
    const DerivedConstants& constant(std::size_t i) const { return constants_.at(i); }

    /// Sum of the fading figures.
    double total_mu() const noexcept {
        double s = 0.0;
        for (const auto& b : branches_) s += b.mu;
        return s;
    }

    /// E[Y], the sum of the branch mean SNRs.
    double mean() const noexcept {
        double s = 0.0;
        for (const auto& b : branches_) s += b.mean_snr;
        return s;
    }

    /// Largest gamma scale over all branches.
    double max_scale() const noexcept {
        double m = 0.0;
        for (const auto& c : constants_) m = std::max(m, std::max(c.a, c.b));
        return m;
    }

    /// Same fading shape with every branch mean SNR replaced by `snr`.
    MrcChannel with_mean_snr(double snr) const {
        std::vector<FadingBranch> scaled = branches_;
        for (auto& b : scaled) b.mean_snr = snr;
        return MrcChannel(std::move(scaled));
    }

private:
    std::vector<FadingBranch> branches_;
    std::vector<DerivedConstants> constants_;
};

}  // namespace etamu
