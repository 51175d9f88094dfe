#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "etamu/link_performance.hpp"

using etamu::FadingBranch;
using etamu::FadingFormat;
using etamu::ModulationScheme;
using etamu::MrcChannel;

namespace {

MrcChannel figure_channel(int L, double snr = 1.0) {
    const double mus[] = {1.0, 1.5, 2.0, 3.5, 4.5};
    std::vector<FadingBranch> b;
    for (int i = 0; i < L; ++i) b.push_back({FadingFormat::Format1, 1.2, mus[i], snr});
    return MrcChannel(b);
}

MrcChannel gamma2() { return MrcChannel{{FadingFormat::Format1, 1.0, 1.0, 1.0}}; }

etamu::InversionConfig relative_cfg(double rel) {
    etamu::InversionConfig cfg;
    cfg.target_abs_tol = std::numeric_limits<double>::min();
    cfg.target_rel_tol = rel;
    return cfg;
}

}  // namespace

TEST(Modulation, PresetsAndParsing) {
    EXPECT_EQ(ModulationScheme::cbfsk().p, 0.5);
    EXPECT_EQ(ModulationScheme::cbfsk().q, 0.5);
    EXPECT_EQ(ModulationScheme::cbpsk().q, 1.0);
    EXPECT_EQ(ModulationScheme::nbfsk().p, 1.0);
    EXPECT_EQ(ModulationScheme::dbpsk().q, 1.0);
    EXPECT_EQ(etamu::parse_modulation("DBPSK").name, "dbpsk");
    const auto custom = etamu::parse_modulation("2.5,0.25");
    EXPECT_EQ(custom.p, 2.5);
    EXPECT_EQ(custom.q, 0.25);
    EXPECT_THROW(etamu::parse_modulation("qpsk"), etamu::ParameterOutOfRange);
    EXPECT_THROW(etamu::parse_modulation("1,x"), etamu::ParameterOutOfRange);
    EXPECT_THROW(etamu::parse_modulation("0,1"), etamu::ParameterOutOfRange);
}

TEST(ConditionalBer, Examples) {
    for (const auto& m : etamu::preset_modulations()) EXPECT_DOUBLE_EQ(etamu::conditional_ber(m, 0.0), 0.5);
    EXPECT_NEAR(etamu::conditional_ber(ModulationScheme::dbpsk(), 1.0), 0.5 * std::exp(-1.0), 1e-15);
    EXPECT_NEAR(etamu::conditional_ber(ModulationScheme::dbpsk(), 1.0), 0.1839397, 1e-7);
    EXPECT_NEAR(etamu::conditional_ber(ModulationScheme::cbpsk(), 1.0), 0.5 * std::erfc(1.0), 1e-15);
    EXPECT_NEAR(etamu::conditional_ber(ModulationScheme::cbpsk(), 1.0), 0.0786496, 1e-7);
}

TEST(ConditionalBer, StrictlyDecreasing) {
    for (const auto& m : etamu::preset_modulations()) {
        double previous = 0.5;
        for (double y = 0.01; y < 50.0; y *= 1.5) {
            const double v = etamu::conditional_ber(m, y);
            EXPECT_LT(v, previous);
            EXPECT_GT(v, 0.0);
            previous = v;
        }
    }
}

TEST(Outage, Examples) {
    const MrcChannel pair{{FadingFormat::Format1, 1.0, 1.0, 1.0}, {FadingFormat::Format1, 1.0, 1.0, 1.0}};
    EXPECT_EQ(etamu::outage(pair, 0.0).value, 0.0);
    EXPECT_NEAR(etamu::outage(pair, pair.mean()).value, 0.5665299, 1e-7);
    double previous = 0.0;
    for (double y = 0.1; y < 10.0; y += 0.1) {
        const double v = etamu::outage(figure_channel(3), y).value;
        EXPECT_GE(v, previous);
        previous = v;
    }
}

TEST(AvgBer, QuadratureExamples) {
    EXPECT_NEAR(etamu::avg_ber_quadrature(gamma2(), ModulationScheme::dbpsk()).value, 0.2222222, 1e-7);
    EXPECT_NEAR(etamu::avg_ber_quadrature(gamma2(), ModulationScheme::dbpsk()).value, 0.5 / (1.5 * 1.5), 1e-10);
    EXPECT_NEAR(etamu::avg_ber_quadrature(gamma2(), ModulationScheme::nbfsk()).value, 0.32, 1e-10);
}

TEST(AvgBer, ZeroSnrLimit) {
    const auto ch = figure_channel(3, 1e-9);
    for (const auto& m : etamu::preset_modulations()) {
        EXPECT_NEAR(etamu::avg_ber_quadrature(ch, m).value, 0.5, 1e-3) << m.name;
        EXPECT_NEAR(etamu::avg_ber_contour(ch, m).value, 0.5, 1e-3) << m.name;
    }
}

TEST(AvgBer, ContourExamples) {
    EXPECT_NEAR(etamu::avg_ber_contour(gamma2(), ModulationScheme::dbpsk()).value, 0.2222222, 1e-7);
    const MrcChannel rayleigh{{FadingFormat::Format1, 1.0, 0.5, 1.0}};
    const double closed = 0.5 * (1.0 - std::sqrt(1.0 / 2.0));
    EXPECT_NEAR(etamu::avg_ber_contour(rayleigh, ModulationScheme::cbpsk()).value, 0.1464466, 1e-7);
    EXPECT_NEAR(etamu::avg_ber_contour(rayleigh, ModulationScheme::cbpsk()).value, closed, 1e-10);
    EXPECT_NEAR(etamu::avg_ber_quadrature(rayleigh, ModulationScheme::cbpsk()).value, closed, 1e-10);
}

TEST(AvgBer, UnitShapeIdentity) {
    const std::vector<MrcChannel> channels = {
        figure_channel(1), figure_channel(3), figure_channel(5),
        MrcChannel{{FadingFormat::Format2, -0.6, 0.7, 2.0}, {FadingFormat::Format1, 0.2, 2.5, 0.4}}};
    for (const auto& ch : channels) {
        for (const auto& m : {ModulationScheme::dbpsk(), ModulationScheme::nbfsk()}) {
            const double exact = 0.5 * etamu::mgf(ch, m.q).real();
            EXPECT_NEAR(etamu::avg_ber_quadrature(ch, m).value, exact, 1e-10) << m.name << " L=" << ch.size();
            EXPECT_NEAR(etamu::avg_ber_contour(ch, m).value, exact, 1e-10) << m.name << " L=" << ch.size();
        }
    }
}

TEST(AvgBer, ContourAgreesWithQuadrature) {
    for (int L : {2, 4}) {
        for (const auto& m : etamu::preset_modulations()) {
            const auto q = etamu::avg_ber_quadrature(figure_channel(L), m);
            const auto c = etamu::avg_ber_contour(figure_channel(L), m);
            EXPECT_NEAR(q.value, c.value, 1e-8) << m.name << " L=" << L;
        }
    }
    const auto custom = ModulationScheme::custom(2.0, 0.75);
    EXPECT_NEAR(etamu::avg_ber_quadrature(figure_channel(3), custom).value,
                etamu::avg_ber_contour(figure_channel(3), custom).value, 1e-8);
}

TEST(BerCurve, OrderingAndMonotonicity) {
    std::vector<double> grid;
    for (int db = 0; db <= 20; db += 4) grid.push_back(db);
    const auto cfg = relative_cfg(1e-7);
    const auto tmpl = figure_channel(5);
    const auto cbfsk = etamu::ber_curve(tmpl, ModulationScheme::cbfsk(), grid, cfg, 2);
    const auto cbpsk = etamu::ber_curve(tmpl, ModulationScheme::cbpsk(), grid, cfg, 2);
    const auto nbfsk = etamu::ber_curve(tmpl, ModulationScheme::nbfsk(), grid, cfg, 2);
    const auto dbpsk = etamu::ber_curve(tmpl, ModulationScheme::dbpsk(), grid, cfg, 2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_EQ(cbpsk[i].mean_snr_db, grid[i]);
        EXPECT_LE(cbpsk[i].ber, dbpsk[i].ber);
        EXPECT_LE(cbfsk[i].ber, nbfsk[i].ber);
        EXPECT_LE(cbpsk[i].ber, cbfsk[i].ber);
        EXPECT_LE(dbpsk[i].ber, nbfsk[i].ber);
        const double exact = 0.5 * etamu::mgf(tmpl.with_mean_snr(etamu::db_to_linear(grid[i])), 1.0).real();
        EXPECT_NEAR(dbpsk[i].ber / exact, 1.0, 1e-6);
        for (const auto* curve : {&cbfsk, &cbpsk, &nbfsk, &dbpsk}) {
            EXPECT_GT((*curve)[i].ber, 0.0);
            EXPECT_LE((*curve)[i].ber, 0.5);
            if (i > 0) {
                EXPECT_LT((*curve)[i].ber, (*curve)[i - 1].ber);
            }
        }
    }
}

TEST(BerCurve, ThreadCountDoesNotChangeResults) {
    const std::vector<double> grid = {0.0, 3.0, 6.0, 9.0};
    const auto a = etamu::ber_curve(figure_channel(3), ModulationScheme::cbpsk(), grid, {}, 1);
    const auto b = etamu::ber_curve(figure_channel(3), ModulationScheme::cbpsk(), grid, {}, 4);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(a[i].ber, b[i].ber);
}

TEST(BerCurve, SinglePointMatchesDirectCall) {
    const auto curve = etamu::ber_curve(figure_channel(2), ModulationScheme::cbfsk(), {0.0});
    EXPECT_EQ(curve[0].ber, etamu::avg_ber_quadrature(figure_channel(2), ModulationScheme::cbfsk()).value);
    EXPECT_THROW(etamu::ber_curve(figure_channel(2), ModulationScheme::cbfsk(),
                                  {std::numeric_limits<double>::infinity()}),
                 etamu::ParameterOutOfRange);
}
