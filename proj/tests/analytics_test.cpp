#include <gtest/gtest.h>

#include <cmath>

#include "fratio/analytics.hpp"
#include "fratio/rng.hpp"

using namespace fratio;

namespace {
constexpr double kR_half = 0.8660254037844386;   // sqrt(3)/2
constexpr double kBminus_half = 0.0717967697244908;
constexpr double kBplus_half = 13.928203230275509;
constexpr double kHbar_half = 2.7320508075688772;
} // namespace

TEST(SupportEdges, HalfHalfFrozenValues) {
    const SupportEdges e = support_edges(0.5, 0.5);
    EXPECT_NEAR(e.r, kR_half, 1e-15);
    EXPECT_NEAR(e.b_minus, kBminus_half, 1e-13);
    EXPECT_NEAR(e.b_plus, kBplus_half, 1e-12);
}

TEST(SupportEdges, SmallC2ReducesToSingleWishartEdges) {
    for (double c1 : {0.2, 0.5, 0.8}) {
        const SupportEdges e = support_edges(c1, 1e-12);
        const double lo = (1.0 - std::sqrt(c1)) * (1.0 - std::sqrt(c1));
        const double hi = (1.0 + std::sqrt(c1)) * (1.0 + std::sqrt(c1));
        EXPECT_NEAR(e.b_minus, lo, 1e-9);
        EXPECT_NEAR(e.b_plus, hi, 1e-9);
    }
}

TEST(SupportEdges, RIsSymmetric) {
    EXPECT_DOUBLE_EQ(support_edges(0.3, 0.7).r, support_edges(0.7, 0.3).r);
    EXPECT_DOUBLE_EQ(support_edges(0.12, 0.9).r, support_edges(0.9, 0.12).r);
}

TEST(SupportEdges, RejectsBadRatios) {
    EXPECT_THROW(support_edges(0.0, 0.5), config_error);
    EXPECT_THROW(support_edges(0.5, 1.0), config_error);
    EXPECT_THROW(support_edges(-0.1, 0.5), config_error);
}

TEST(PhaseThreshold, FrozenValueAndEdgeIdentity) {
    const double hb = phase_threshold(0.5, 0.5);
    EXPECT_NEAR(hb, kHbar_half, 1e-14);
    // h_bar = sqrt(b_plus) - 1 for any admissible ratios.
    for (double c1 : {0.2, 0.5, 0.8}) {
        for (double c2 : {0.1, 0.5, 0.9}) {
            const SupportEdges e = support_edges(c1, c2);
            EXPECT_NEAR(phase_threshold(c1, c2), std::sqrt(e.b_plus) - 1.0, 1e-12);
        }
    }
}

TEST(PhaseThreshold, SmallC2LimitIsSqrtC1) {
    EXPECT_NEAR(phase_threshold(0.49, 1e-12), 0.7, 1e-8);
    EXPECT_NEAR(phase_threshold(0.25, 1e-12), 0.5, 1e-8);
}

TEST(SpikeLimit, FrozenValueAndDomain) {
    EXPECT_NEAR(spike_limit(5.0, 0.5, 0.5), 16.5, 1e-13);
    EXPECT_THROW(spike_limit(1.0, 0.5, 0.5), domain_error);
    EXPECT_THROW(spike_limit(kHbar_half, 0.5, 0.5), domain_error);
}

TEST(SpikeLimit, SmallC2LimitFormula) {
    for (double h : {1.0, 3.0, 10.0}) {
        const double expect = (h + 0.5) * (h + 1.0) / h;
        EXPECT_NEAR(spike_limit(h, 0.5, 1e-12), expect, 1e-7 * expect);
    }
}

TEST(SpikeLimit, ContinuousAtThreshold) {
    const double hb = phase_threshold(0.5, 0.5);
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 2; k <= 6; ++k) {
        const double x = spike_limit(hb * (1.0 + std::pow(10.0, -k)), 0.5, 0.5);
        EXPECT_GT(x, kBplus_half);
        EXPECT_LT(x, prev);  // monotone approach to the edge from above
        prev = x;
    }
    EXPECT_NEAR(prev, kBplus_half, 2e-5 * kBplus_half);
}

TEST(SpikeCentering, FrozenValues) {
    const ModelDims d1{200, 400, 400, 1};
    EXPECT_NEAR(spike_centering(5.0, d1), 16.5, 1e-12);
    const ModelDims d2{100, 250, 500, 1};
    EXPECT_NEAR(spike_centering(5.0, d2), 32.4 / 3.8, 1e-12);
}

TEST(SpikeCentering, PoleIsDomainError) {
    // h = (h+1) p/n2 at h = 1, p/n2 = 1/2.
    const ModelDims d{200, 500, 400, 1};
    EXPECT_THROW(spike_centering(1.0, d), domain_error);
    EXPECT_THROW(spike_centering(0.5, d), domain_error);
}

TEST(SpikeCentering, DerivativeMatchesFiniteDifference) {
    const ModelDims d{100, 250, 500, 1};
    for (double h : {3.0, 5.0, 9.0}) {
        const double eps = 1e-6 * h;
        const double fd = (spike_centering(h + eps, d) - spike_centering(h - eps, d)) / (2 * eps);
        EXPECT_NEAR(spike_centering_derivative(h, d), fd, 1e-6 * std::abs(fd));
    }
}

TEST(AsymptoticVariance, FrozenValues) {
    EXPECT_NEAR(asymptotic_variance(5.0, 0.5, 0.5, Setting::CovarianceSpike), 548.4375, 1e-9);
    EXPECT_NEAR(asymptotic_variance(5.0, 0.5, 0.5, Setting::NoncentralitySpike), 482.421875,
                1e-9);
}

TEST(AsymptoticVariance, SmallC2MatchesSingleWishartLimit) {
    // With the denominator Wishart degenerating, the variance approaches
    // 2 c1 (h+1)^2 (h^2 - c1) / h^2.
    const double h = 5.0, c1 = 0.5;
    const double limit = 2.0 * c1 * 36.0 * (25.0 - c1) / 25.0;
    EXPECT_NEAR(limit, 35.28, 1e-12);
    EXPECT_NEAR(asymptotic_variance(h, c1, 1e-3, Setting::CovarianceSpike), limit,
                0.01 * limit);
}

TEST(AsymptoticVariance, OrderingAndPositivityOnGrid) {
    for (double c1 : {0.2, 0.5, 0.8}) {
        for (double c2 : {0.2, 0.5, 0.8}) {
            const double hb = phase_threshold(c1, c2);
            for (double h : {1.02, 1.2, 2.0, 5.0, 20.0}) {
                const double hh = hb * h;
                const double v1 = asymptotic_variance(hh, c1, c2, Setting::CovarianceSpike);
                const double v2 = asymptotic_variance(hh, c1, c2, Setting::NoncentralitySpike);
                EXPECT_GT(v1, 0.0);
                EXPECT_GT(v2, 0.0);
                EXPECT_LT(v2, v1) << "h=" << hh << " c1=" << c1 << " c2=" << c2;
            }
        }
    }
    EXPECT_THROW(asymptotic_variance(1.0, 0.5, 0.5, Setting::CovarianceSpike), domain_error);
}

TEST(StieltjesMx0, SpikePointClosedForms) {
    // At the separated-eigenvalue limit x(h): m0 = -1/(h+c1), and the two
    // derivatives have closed forms through the same h-parameterization.
    for (double h : {3.0, 5.0, 8.0}) {
        for (double c1 : {0.2, 0.5}) {
            for (double c2 : {0.2, 0.5}) {
                if (!(h > phase_threshold(c1, c2))) continue;
                const double x = spike_limit(h, c1, c2);
                const StieltjesPoint s = stieltjes_mx0(x, c1, c2);
                EXPECT_NEAR(s.m0, -1.0 / (h + c1), 1e-12);
                const double denom_h = c1 + c2 * (1 + h) * (1 + h) - h * h;
                const double mp = -h * h / ((h + c1) * (h + c1) * denom_h);
                const double dm = -std::pow(c2 * (1 + h) - h, 2) /
                                  ((h + c1) * (h + c1) * denom_h);
                EXPECT_NEAR(s.mprime0, mp, 1e-10 * std::abs(mp));
                EXPECT_NEAR(s.dm0_dx, dm, 1e-10 * std::abs(dm));
            }
        }
    }
}

TEST(StieltjesMx0, FrozenAnchor) {
    const StieltjesPoint s = stieltjes_mx0(16.5, 0.5, 0.5);
    EXPECT_NEAR(s.m0, -0.18181818181818182, 1e-14);
    EXPECT_NEAR(s.mprime0, 25.0 / 196.625, 1e-12);
    EXPECT_NEAR(s.dm0_dx, 4.0 / 196.625, 1e-13);
}

TEST(StieltjesMx0, EdgeLimitValue) {
    const double target = (0.5 - 1.0) / ((kR_half + 1.0) * kR_half);  // -0.309401
    EXPECT_NEAR(target, -0.30940107675850305, 1e-14);
    const double x = kBplus_half * (1.0 + 1e-8);
    EXPECT_NEAR(stieltjes_mx0(x, 0.5, 0.5).m0, target, 2e-4);
}

TEST(StieltjesMx0, ResidualProperty) {
    RngStream g(314, 0, 0);
    int tested = 0;
    while (tested < 1000) {
        const double c1 = 0.05 + 0.9 * g.uniform();
        const double c2 = 0.05 + 0.9 * g.uniform();
        const AspectRatios a(c1, c2);
        const double x = a.b_plus * (1.0 + 99.0 * g.uniform());
        if (!(x > a.b_plus * (1.0 + 1e-10))) continue;
        const StieltjesPoint s = stieltjes_mx0(x, c1, c2);
        ASSERT_LT(std::abs(stieltjes_quadratic_residual(s.m0, x, c1, c2)), 1e-10)
            << "x=" << x << " c1=" << c1 << " c2=" << c2;
        ASSERT_LT(s.m0, 0.0);
        ASSERT_GT(s.m0, (c2 - 1.0) / ((a.r + 1.0) * a.r));
        ASSERT_GT(s.dm0_dx, 0.0);
        ++tested;
    }
}

TEST(StieltjesMx0, DerivativeMatchesFiniteDifference) {
    for (double x : {15.0, 16.5, 30.0, 90.0}) {
        const double eps = 1e-5;
        const double fd =
            (stieltjes_mx0(x + eps, 0.5, 0.5).m0 - stieltjes_mx0(x - eps, 0.5, 0.5).m0) /
            (2 * eps);
        const StieltjesPoint s = stieltjes_mx0(x, 0.5, 0.5);
        EXPECT_NEAR(s.dm0_dx, fd, 1e-6 * std::abs(fd));
    }
}

TEST(StieltjesMx0, MonotoneInX) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double x = 14.0; x < 100.0; x += 0.5) {
        const double m = stieltjes_mx0(x, 0.5, 0.5).m0;
        EXPECT_GT(m, prev);
        prev = m;
    }
    EXPECT_THROW(stieltjes_mx0(13.9, 0.5, 0.5), domain_error);
}

TEST(WachterPdf, SupportAndEdges) {
    EXPECT_EQ(wachter_pdf(0.05, 0.5, 0.5), 0.0);
    EXPECT_EQ(wachter_pdf(14.0, 0.5, 0.5), 0.0);
    EXPECT_EQ(wachter_pdf(kBminus_half, 0.5, 0.5), 0.0);
    EXPECT_EQ(wachter_pdf(kBplus_half, 0.5, 0.5), 0.0);
    EXPECT_GT(wachter_pdf(1.0, 0.5, 0.5), 0.0);
}

TEST(WachterPdf, IntegratesToOne) {
    for (double c1 : {0.2, 0.5, 0.8}) {
        for (double c2 : {0.2, 0.5, 0.8}) {
            EXPECT_NEAR(wachter_total_mass(c1, c2), 1.0, 1e-8)
                << "c1=" << c1 << " c2=" << c2;
        }
    }
}

TEST(StieltjesWachter, SpikePointClosedForm) {
    // m(x(h)) = -(1+h)/(x(h) h) for any super-critical h.
    for (double h : {3.0, 4.0, 5.0, 8.0}) {
        for (auto [c1, c2] : {std::pair{0.5, 0.5}, std::pair{0.2, 0.5}, std::pair{0.5, 0.2}}) {
            if (!(h > phase_threshold(c1, c2))) continue;
            const double x = spike_limit(h, c1, c2);
            const double m = stieltjes_wachter(x, c1, c2).m;
            EXPECT_NEAR(m, -(1.0 + h) / (x * h), 1e-9) << "h=" << h;
        }
    }
    EXPECT_NEAR(stieltjes_wachter(16.5, 0.5, 0.5).m, -0.07272727272727272, 1e-10);
}

TEST(StieltjesWachter, EdgeLimitValue) {
    const double target = -1.0 / (kBplus_half - std::sqrt(kBplus_half));  // -0.0980762
    EXPECT_NEAR(target, -0.09807621135331597, 1e-14);
    double prev = 1e9;
    for (int j = 2; j <= 6; ++j) {
        const double x = kBplus_half * (1.0 + std::pow(10.0, -j));
        const double m = stieltjes_wachter(x, 0.5, 0.5).m;
        EXPECT_LT(m, prev);  // decreasing x => m decreases toward the edge value
        prev = m;
    }
    EXPECT_NEAR(prev, target, 2e-3);
}

TEST(StieltjesWachter, DecayAndDomain) {
    EXPECT_LT(stieltjes_wachter(1e6, 0.5, 0.5).m, 0.0);
    EXPECT_GT(stieltjes_wachter(1e6, 0.5, 0.5).m, -2e-6);
    EXPECT_THROW(stieltjes_wachter(13.9, 0.5, 0.5), domain_error);
    double prev = -1e9;
    for (double x = 14.0; x < 60.0; x += 1.0) {
        const double m = stieltjes_wachter(x, 0.5, 0.5).m;
        EXPECT_GT(m, prev);
        EXPECT_LT(m, 0.0);
        prev = m;
    }
}
