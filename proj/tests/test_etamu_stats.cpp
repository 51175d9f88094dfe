#include <gtest/gtest.h>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "etamu/etamu_stats.hpp"
#include "etamu/mc_oracle.hpp"
#include "etamu/quadrature.hpp"

using etamu::Complex;
using etamu::FadingBranch;
using etamu::FadingFormat;
using etamu::MrcChannel;

namespace {

MrcChannel figure_channel(int L, double snr = 1.0) {
    const double mus[] = {1.0, 1.5, 2.0, 3.5, 4.5};
    std::vector<FadingBranch> b;
    for (int i = 0; i < L; ++i) b.push_back({FadingFormat::Format1, 1.2, mus[i], snr});
    return MrcChannel(b);
}

MrcChannel nakagami_pair() {
    return MrcChannel{{FadingFormat::Format1, 1.0, 1.0, 1.0}, {FadingFormat::Format1, 1.0, 1.0, 1.0}};
}

MrcChannel mixed_channel() {
    return MrcChannel{{FadingFormat::Format2, 0.4, 0.75, 0.8}, {FadingFormat::Format1, 3.0, 1.25, 1.5}};
}

double gamma_pdf(double shape, double scale, double y) {
    return boost::math::pdf(boost::math::gamma_distribution<double>(shape, scale), y);
}

}  // namespace

TEST(Mgf, Examples) {
    const MrcChannel single{{FadingFormat::Format1, 1.0, 1.0, 1.0}};
    EXPECT_EQ(etamu::mgf(single, 0.0), Complex(1.0, 0.0));
    EXPECT_NEAR(etamu::mgf(single, 2.0).real(), 0.25, 1e-15);
    const MrcChannel eta12{{FadingFormat::Format1, 1.2, 1.0, 1.0}};
    EXPECT_NEAR(etamu::mgf(eta12, 1.0).real(), 121.0 / 272.0, 1e-15);
    EXPECT_NEAR(etamu::mgf(eta12, 1.0).real(), 0.4448529, 1e-7);
    EXPECT_THROW(etamu::mgf(single, -2.0), etamu::EvaluationAtBranchPoint);
}

TEST(Mgf, EqualsGammaRatioForm) {
    // (1 + z)^{-mu} = (Gamma(1 + z) / Gamma(2 + z))^mu on the principal branch.
    const auto ch = figure_channel(5);
    for (Complex s : {Complex(0.3, 0.0), Complex(1.0, 2.0), Complex(-0.5, -3.0), Complex(4.0, 40.0)}) {
        Complex log_m = 0.0;
        for (std::size_t l = 0; l < ch.size(); ++l) {
            const auto& c = ch.constant(l);
            const double mu = ch.branch(l).mu;
            for (double scale : {c.a, c.b}) {
                log_m += mu * (etamu::log_gamma(1.0 + s * scale) - etamu::log_gamma(2.0 + s * scale));
            }
        }
        const Complex direct = etamu::mgf(ch, s);
        EXPECT_LT(std::abs(std::exp(log_m) - direct), 1e-12 * std::abs(direct)) << "s = " << s;
    }
}

TEST(Mgf, ConjugateSymmetric) {
    const auto ch = mixed_channel();
    const Complex s(-0.2, 1.7);
    EXPECT_LT(std::abs(etamu::mgf(ch, std::conj(s)) - std::conj(etamu::mgf(ch, s))), 1e-15);
}

TEST(PdfSingleClosed, Examples) {
    EXPECT_NEAR(etamu::pdf_single_closed({FadingFormat::Format1, 1.0, 1.0, 1.0}, 1.0), 4.0 * std::exp(-2.0), 1e-15);
    EXPECT_NEAR(etamu::pdf_single_closed({FadingFormat::Format1, 1.0, 1.0, 1.0}, 1.0), 0.5413411, 1e-7);
    EXPECT_EQ(etamu::pdf_single_closed({FadingFormat::Format1, 1.2, 0.75, 1.0}, 0.0), 0.0);
    EXPECT_EQ(etamu::pdf_single_closed({FadingFormat::Format2, 0.3, 2.0, 1.0}, 0.0), 0.0);
}

TEST(PdfSingleClosed, HoytMatchesGammaPairConvolution) {
    // Format 2, eta = 0 is a symmetric pair and collapses to Gamma(1, 1);
    // eta = 0.5 exercises the Bessel path and is checked against the series oracle.
    const FadingBranch hoyt0{FadingFormat::Format2, 0.0, 0.5, 1.0};
    EXPECT_NEAR(etamu::pdf_single_closed(hoyt0, 0.5), std::exp(-0.5), 1e-14);
    const FadingBranch hoyt{FadingFormat::Format2, 0.5, 0.5, 1.0};
    const auto c = etamu::derive_constants(hoyt);
    for (double y : {0.01, 0.5, 2.0, 6.0}) {
        EXPECT_NEAR(etamu::pdf_single_closed(hoyt, y), etamu::gamma_sum_pdf({0.5, 0.5}, {c.a, c.b}, y), 1e-12)
            << "y=" << y;
    }
    // Closed form of the Hoyt power density as an independent check.
    const double q2 = (1.0 - 0.5) / (1.0 + 0.5);
    for (double y : {0.2, 1.0, 3.0}) {
        const double expected = (1.0 + q2) / (2.0 * std::sqrt(q2)) *
                                std::exp(-std::pow(1.0 + q2, 2) * y / (4.0 * q2)) *
                                boost::math::cyl_bessel_i(0.0, (1.0 - q2 * q2) * y / (4.0 * q2));
        EXPECT_NEAR(etamu::pdf_single_closed(hoyt, y), expected, 1e-12) << "y=" << y;
    }
}

TEST(PdfSingleClosed, OriginBehaviour) {
    const FadingBranch half{FadingFormat::Format1, 0.3, 0.5, 2.0};
    const auto c = etamu::derive_constants(half);
    EXPECT_NEAR(etamu::pdf_single_closed(half, 0.0), std::sqrt(c.h) / 2.0, 1e-15);
    EXPECT_NEAR(etamu::pdf_single_closed(half, 1e-12), etamu::pdf_single_closed(half, 0.0), 1e-10);
    EXPECT_TRUE(std::isinf(etamu::pdf_single_closed({FadingFormat::Format1, 0.3, 0.3, 2.0}, 0.0)));
}

TEST(PdfSingleClosed, MatchesGammaPairOracleAcrossParameters) {
    for (auto format : {FadingFormat::Format1, FadingFormat::Format2}) {
        for (double eta : {0.05, 0.4, 0.9, 2.5}) {
            if (format == FadingFormat::Format2 && eta >= 1.0) continue;
            for (double mu : {0.5, 0.8, 1.5, 3.0}) {
                const FadingBranch b{format, eta, mu, 1.3};
                const auto c = etamu::derive_constants(b);
                for (double y : {0.05, 0.7, 2.0, 5.0}) {
                    const double oracle = etamu::gamma_sum_pdf({mu, mu}, {c.a, c.b}, y);
                    EXPECT_NEAR(etamu::pdf_single_closed(b, y), oracle, 1e-11 * std::max(1.0, oracle))
                        << "eta=" << eta << " mu=" << mu << " y=" << y;
                }
            }
        }
    }
}

TEST(PdfSingleClosed, NakagamiSwitchIsContinuous) {
    // Just above and below the |H|/h threshold.
    const double eta_in = 1.0 + 1e-9;
    const double eta_out = 1.0 + 1e-7;
    for (double y : {0.3, 1.0, 2.5}) {
        const double a = etamu::pdf_single_closed({FadingFormat::Format1, eta_in, 1.5, 1.0}, y);
        const double b = etamu::pdf_single_closed({FadingFormat::Format1, eta_out, 1.5, 1.0}, y);
        EXPECT_NEAR(a, gamma_pdf(3.0, 1.0 / 3.0, y), 1e-12);
        EXPECT_NEAR(a, b, 1e-9);
    }
}

TEST(PdfSum, SingleBranchDelegatesToClosedForm) {
    const MrcChannel ch{{FadingFormat::Format1, 1.2, 1.5, 1.0}};
    for (double y : {0.1, 1.0, 4.0}) {
        const auto r = etamu::pdf_sum(ch, y);
        EXPECT_NEAR(r.value, etamu::pdf_single_closed(ch.branch(0), y), 1e-10);
        EXPECT_NEAR(etamu::pdf_sum_contour(ch, y).value, r.value, 1e-10);
    }
}

TEST(PdfSum, NakagamiPairIsGammaFour) {
    const auto r = etamu::pdf_sum(nakagami_pair(), 2.0);
    EXPECT_NEAR(r.value, 8.0 * std::exp(-4.0) / (6.0 * 0.0625), 1e-10);
    EXPECT_NEAR(r.value, 0.3907336, 1e-7);
}

TEST(PdfSum, FigureChannelMatchesOracle) {
    const auto ch = figure_channel(3);
    const auto g = etamu::gamma_decomposition(ch);
    for (int i = 1; i <= 60; ++i) {
        const double y = 0.2 * i;
        EXPECT_NEAR(etamu::pdf_sum(ch, y).value, etamu::gamma_sum_pdf(g.shapes, g.scales, y), 1e-8) << "y=" << y;
    }
}

TEST(PdfSum, RejectsNonPositiveArgument) {
    EXPECT_THROW(etamu::pdf_sum(nakagami_pair(), 0.0), etamu::ParameterOutOfRange);
}

TEST(CdfSum, Examples) {
    const auto ch = nakagami_pair();
    EXPECT_EQ(etamu::cdf_sum(ch, 0.0).value, 0.0);
    EXPECT_NEAR(etamu::cdf_sum(ch, 2.0).value, boost::math::gamma_p(4.0, 4.0), 1e-10);
    EXPECT_NEAR(etamu::cdf_sum(ch, 2.0).value, 0.5665299, 1e-7);
    EXPECT_NEAR(etamu::cdf_sum(ch, 30.0 * ch.mean()).value, 1.0, 1e-9);
}

TEST(CdfSum, StaysInUnitIntervalAndIsMonotone) {
    const auto ch = mixed_channel();
    double previous = 0.0;
    for (double y = 0.01; y < 40.0; y *= 1.25) {
        const auto r = etamu::cdf_sum(ch, y);
        EXPECT_GE(r.value, 0.0);
        EXPECT_LE(r.value, 1.0);
        EXPECT_GE(r.value, previous - r.abs_err_est);
        previous = r.value;
    }
}

TEST(Moments, Examples) {
    const auto m1 = etamu::moments(MrcChannel{{FadingFormat::Format1, 1.0, 1.0, 1.0}});
    EXPECT_DOUBLE_EQ(m1.mean, 1.0);
    EXPECT_DOUBLE_EQ(m1.variance, 0.5);
    EXPECT_NEAR(etamu::moments(figure_channel(5)).mean, 5.0, 1e-14);
    EXPECT_NEAR(etamu::moments(MrcChannel{{FadingFormat::Format1, 1.2, 1.0, 1.0}}).variance, 0.5041322, 1e-7);
}

TEST(Moments, MatchMgfDerivatives) {
    const auto ch = mixed_channel();
    const auto m = etamu::moments(ch);
    const double h = 1e-4;
    const double m_plus = etamu::mgf(ch, h).real();
    const double m_minus = etamu::mgf(ch, -h).real();
    const double first = -(m_plus - m_minus) / (2.0 * h);
    const double second = (m_plus - 2.0 + m_minus) / (h * h);
    EXPECT_NEAR(first, m.mean, 1e-7);
    EXPECT_NEAR(second - first * first, m.variance, 1e-5);
}

TEST(Invariants, NormalizationAndTransformRoundTrip) {
    for (const auto& ch : {figure_channel(2), figure_channel(4), mixed_channel()}) {
        const double upper = 30.0 * ch.mean();
        auto density = [&](double y) { return etamu::pdf_sum(ch, y).value; };
        const auto total = etamu::quad::integrate(density, 0.0, upper, 1e-9);
        EXPECT_NEAR(total.value, 1.0, 1e-6);
        for (double s : {0.5, 1.0, 2.0}) {
            const auto r = etamu::quad::integrate([&](double y) { return std::exp(-s * y) * density(y); }, 0.0,
                                                  upper, 1e-12);
            const double expected = etamu::mgf(ch, s).real();
            EXPECT_NEAR(r.value / expected, 1.0, 1e-7) << "s=" << s;
        }
    }
}

TEST(Invariants, CdfDerivativeMatchesPdf) {
    const auto ch = figure_channel(3);
    for (int i = 1; i <= 50; ++i) {
        const double y = 0.2 * i;
        const double h = 1e-3;
        const double fd = (etamu::cdf_sum(ch, y + h).value - etamu::cdf_sum(ch, y - h).value) / (2.0 * h);
        const auto p = etamu::pdf_sum(ch, y);
        EXPECT_NEAR(fd, p.value, std::max(1e-6, 10.0 * p.abs_err_est)) << "y=" << y;
    }
}

TEST(Invariants, PdfNonNegativeWithinErrorEstimate) {
    for (const auto& ch : {figure_channel(5), mixed_channel()}) {
        for (double y = 1e-3; y < 60.0; y *= 1.4) {
            const auto r = etamu::pdf_sum(ch, y);
            EXPECT_GE(r.value, -r.abs_err_est) << "y=" << y;
        }
    }
}

TEST(SnrGrid, PointsAndValidation) {
    const etamu::SnrGrid g{0.5, 2.0, 0.5};
    const auto pts = g.points();
    ASSERT_EQ(pts.size(), 4u);
    EXPECT_DOUBLE_EQ(pts.front(), 0.5);
    EXPECT_DOUBLE_EQ(pts.back(), 2.0);
    EXPECT_EQ((etamu::SnrGrid{0.0, 1.0, 0.1}).points().size(), 11u);
    EXPECT_THROW((etamu::SnrGrid{1.0, 1.0, 0.1}).points(), etamu::ParameterOutOfRange);
    EXPECT_THROW((etamu::SnrGrid{0.0, 1.0, 0.0}).points(), etamu::ParameterOutOfRange);
    EXPECT_THROW((etamu::SnrGrid{-1.0, 1.0, 0.5}).points(), etamu::ParameterOutOfRange);
}
