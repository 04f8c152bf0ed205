#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "fratio/hyp1f1_mp.hpp"
#include "fratio/special.hpp"

using namespace fratio;

namespace {
// Benchmark saddle configuration: u = 3/4, v = 1/4, zeta = 33/14, where
// z_plus = 11/4 exactly.
constexpr double kU = 0.75, kV = 0.25;
const double kZetaBench = 33.0 / 14.0;
} // namespace

TEST(Hyp1f1Series, EmptySumIsOne) {
    const LogComplex r = hyp1f1_series({cplx(2.3, 0.4), cplx(5.0, 0.0), cplx(0.0, 0.0)});
    EXPECT_NEAR(r.log_mag, 0.0, 1e-15);
    EXPECT_NEAR(r.phase, 0.0, 1e-15);
}

TEST(Hyp1f1Series, EqualParametersGiveExp) {
    // Oscillatory arguments with |Im z| near 50 cancel beyond double
    // precision and are outside the stable regime, so stay moderate here.
    for (cplx z : {cplx(2.0, 3.0), cplx(10.0, -4.0), cplx(-30.0, 0.0), cplx(0.5, 10.0)}) {
        const LogComplex r = hyp1f1_series({cplx(1.0, 0.0), cplx(1.0, 0.0), z});
        EXPECT_NEAR(r.log_mag, z.real(), 1e-10 * (1.0 + std::abs(z.real()))) << z;
        // Phase is defined mod 2pi.
        const double d = std::remainder(r.phase - z.imag(), 2.0 * M_PI);
        EXPECT_NEAR(d, 0.0, 1e-9) << z;
    }
}

TEST(Hyp1f1Series, ClassicValues) {
    // From the Euler integral representation: 1F1(2,3;1) = 2 int_0^1 e^t t dt
    // = 2 exactly, and 1F1(1,3;1) = 2 int_0^1 e^t (1-t) dt = 2(e-2).
    const LogComplex a = hyp1f1_series({cplx(2.0, 0.0), cplx(3.0, 0.0), cplx(1.0, 0.0)});
    EXPECT_NEAR(std::exp(a.log_mag) * std::cos(a.phase), 2.0, 1e-12);
    const LogComplex b = hyp1f1_series({cplx(1.0, 0.0), cplx(3.0, 0.0), cplx(1.0, 0.0)});
    EXPECT_NEAR(std::exp(b.log_mag) * std::cos(b.phase), 2.0 * (M_E - 2.0), 1e-12);
}

TEST(Hyp1f1Series, MatchesMultiprecisionOracle) {
    // All-positive cases, including far beyond |z| = 50 (no cancellation).
    struct Case {
        double a, b, z;
    };
    for (const Case c : {Case{2.5, 7.3, 30.0}, Case{38.5, 13.5, 117.857142857142857},
                         Case{151.0, 51.0, 1000.0}, Case{76.0, 26.0, 250.0}}) {
        const LogComplex r = hyp1f1_series({cplx(c.a, 0.0), cplx(c.b, 0.0), cplx(c.z, 0.0)});
        const double oracle = hyp1f1_log_mp(c.a, c.b, c.z);
        EXPECT_NEAR(r.log_mag, oracle, 1e-10 * (1.0 + std::abs(oracle)))
            << "a=" << c.a << " b=" << c.b << " z=" << c.z;
        EXPECT_NEAR(std::remainder(r.phase, 2.0 * M_PI), 0.0, 1e-10);
    }
}

TEST(Hyp1f1Series, NegativeArgumentViaKummerTransform) {
    // 1F1(2,3;-1): small alternating series, directly summable.
    double direct = 0.0, term = 1.0;
    for (int n = 0; n < 40; ++n) {
        direct += term;
        term *= (2.0 + n) / ((3.0 + n) * (n + 1.0)) * -1.0;
    }
    const LogComplex r = hyp1f1_series({cplx(2.0, 0.0), cplx(3.0, 0.0), cplx(-1.0, 0.0)});
    EXPECT_NEAR(std::exp(r.log_mag) * std::cos(r.phase), direct, 1e-12);
}

TEST(Hyp1f1Series, RangeAndDomainPolicing) {
    EXPECT_THROW(hyp1f1_series({cplx(501.0, 0.0), cplx(5.0, 0.0), cplx(1.0, 0.0)}),
                 range_error);
    EXPECT_THROW(hyp1f1_series({cplx(2.0, 0.0), cplx(5.0, 0.0), cplx(30.0, 45.0)}),
                 range_error);
    EXPECT_THROW(hyp1f1_series({cplx(2.0, 0.0), cplx(0.0, 0.0), cplx(1.0, 0.0)}),
                 domain_error);
    EXPECT_THROW(hyp1f1_series({cplx(2.0, 0.0), cplx(-3.0, 0.0), cplx(1.0, 0.0)}),
                 domain_error);
}

TEST(Hyp1f1Mp, ExponentialIdentity) {
    EXPECT_NEAR(hyp1f1_log_mp(1.0, 1.0, 7.5), 7.5, 1e-12);
    EXPECT_THROW(hyp1f1_log_mp(1.0, 1.0, -1.0), argument_error);
}

TEST(ZPlus, BenchmarkValueAndResidual) {
    const cplx zp = zplus_auto(cplx(kZetaBench, 0.0), kU, kV);
    EXPECT_NEAR(zp.real(), 2.75, 1e-12);
    EXPECT_NEAR(zp.imag(), 0.0, 1e-14);
    const cplx res = zp * zp + (kV - kZetaBench) * zp - kU * kZetaBench;
    EXPECT_LT(std::abs(res), 1e-12);
}

TEST(ZPlus, ExceedsZetaOnPositiveAxis) {
    for (double z = 0.1; z < 10.0; z += 0.3) {
        const cplx zp = zplus_auto(cplx(z, 0.0), kU, kV);
        EXPECT_NEAR(zp.imag(), 0.0, 1e-13);
        EXPECT_GT(zp.real(), z);
        // Round trip through the inverse map.
        EXPECT_LT(std::abs(zeta_of_zplus(zp, kU, kV) - cplx(z, 0.0)), 1e-12);
    }
}

TEST(ZPlus, DerivativeMatchesFiniteDifference) {
    for (double z = 0.25; z <= 10.0; z += 0.75) {
        const double eps = 1e-6;
        const cplx zp = zplus_auto(cplx(z, 0.0), kU, kV);
        const cplx fd = (zplus_auto(cplx(z + eps, 0.0), kU, kV) -
                         zplus_auto(cplx(z - eps, 0.0), kU, kV)) /
                        (2.0 * eps);
        const cplx an = dzplus_dzeta(zp, kU, kV);
        EXPECT_LT(std::abs(an - fd), 1e-8 * std::abs(an));
        EXPECT_GT(an.real(), 0.0);
        // Reciprocal consistency with the z_plus-plane derivative.
        EXPECT_LT(std::abs(an * dzeta_dzplus(zp, kU, kV) - 1.0), 1e-10);
    }
}

TEST(ZPlus, RoundTripOffAxis) {
    for (double re : {-2.0, -1.0, 0.5, 2.0}) {
        for (double im : {0.4, 1.5, -0.9}) {
            const cplx zeta(re, im);
            const cplx zp = zplus_auto(zeta, kU, kV);
            EXPECT_LT(std::abs(zeta_of_zplus(zp, kU, kV) - zeta), 1e-11)
                << "zeta=" << zeta;
        }
    }
}

TEST(ZPlus, BranchPointIsSingular) {
    // Branch points at zeta = -(2u-v) +- 2 sqrt(u(u-v)).
    const double zb = -(2.0 * kU - kV) + 2.0 * std::sqrt(kU * (kU - kV));
    EXPECT_THROW(zplus(cplx(zb, 0.0), kU, kV, Branch::Principal), singularity_error);
}

TEST(ZPlus, ContinuousAcrossBranchSwitchLine) {
    // Walking Re zeta across v - 2u at fixed Im: the auto-selected branch
    // flips exactly where the principal square root jumps, so z_plus stays
    // continuous.
    cplx prev = zplus_auto(cplx(-1.0, 0.8), kU, kV);
    for (double x = -1.0 - 1e-3; x >= -1.5; x -= 1e-3) {
        const cplx cur = zplus_auto(cplx(x, 0.8), kU, kV);
        ASSERT_LT(std::abs(cur - prev), 5e-3) << "x=" << x;
        prev = cur;
    }
}

TEST(PhiPsi, BenchmarkPsiValue) {
    const SaddleState s = phi_psi({kU, kV, 50, cplx(kZetaBench, 0.0)});
    const double expected = std::sqrt(2.0) * 3.5 / (std::sqrt(0.5) * std::sqrt(23.75));
    EXPECT_NEAR(expected, 1.4363697, 1e-6);
    EXPECT_NEAR(s.psi.real(), 0.0, 1e-12);
    EXPECT_NEAR(s.psi.imag(), expected, 1e-9);
    EXPECT_NEAR(s.z_plus.real(), 2.75, 1e-12);
}

TEST(PhiPsi, PhiDecreasingAndConvexOnPositiveAxis) {
    double prev_phi = std::numeric_limits<double>::infinity();
    std::vector<double> vals;
    for (double z = 0.25; z <= 10.0; z += 0.25) {
        const SaddleState s = phi_psi({kU, kV, 50, cplx(z, 0.0)});
        EXPECT_NEAR(s.phi.imag(), 0.0, 1e-12);
        EXPECT_LT(s.phi.real(), prev_phi);
        prev_phi = s.phi.real();
        vals.push_back(s.phi.real());
    }
    for (std::size_t i = 1; i + 1 < vals.size(); ++i)
        EXPECT_GT(vals[i - 1] + vals[i + 1] - 2.0 * vals[i], 0.0) << "index " << i;
}

TEST(PhiPsi, DomainPolicing) {
    EXPECT_THROW(phi_psi({kU, kV, 50, cplx(0.0, 0.0)}), domain_error);
    EXPECT_THROW(phi_psi({kU, kV, 50, cplx(-0.5, 0.0)}), domain_error);
}

TEST(Hyp1f1Uniform, MatchesOracleAtDeclaredRate) {
    // u = 3/4, v = 1/4 arises from p = nA/2, n2 = nA; a = nA u + 1 etc.
    for (int na : {50, 100, 200}) {
        for (double zeta : {0.5, 1.0, 2.357142857142857, 4.0, 5.0}) {
            const LogComplex approx = hyp1f1_uniform({kU, kV, na, cplx(zeta, 0.0)});
            const double oracle =
                hyp1f1_log_mp(na * kU + 1.0, na * kV + 1.0, na * zeta);
            const double rel = std::abs(std::expm1(approx.log_mag - oracle));
            EXPECT_LT(rel, 2.0 / na) << "nA=" << na << " zeta=" << zeta;
            EXPECT_NEAR(std::remainder(approx.phase, 2.0 * M_PI), 0.0, 1e-9);
        }
    }
}

TEST(Hyp1f1Uniform, ErrorHalvesWhenNaDoubles) {
    for (double zeta : {1.0, 2.357142857142857, 4.0}) {
        const double e50 = std::abs(std::expm1(
            hyp1f1_uniform({kU, kV, 50, cplx(zeta, 0.0)}).log_mag -
            hyp1f1_log_mp(50 * kU + 1.0, 50 * kV + 1.0, 50 * zeta)));
        const double e100 = std::abs(std::expm1(
            hyp1f1_uniform({kU, kV, 100, cplx(zeta, 0.0)}).log_mag -
            hyp1f1_log_mp(100 * kU + 1.0, 100 * kV + 1.0, 100 * zeta)));
        const double ratio = e100 / e50;
        EXPECT_GT(ratio, 0.35) << "zeta=" << zeta;
        EXPECT_LT(ratio, 0.65) << "zeta=" << zeta;
    }
}

TEST(Hyp1f1Uniform, ContinuousAlongComplexArc) {
    // Saddle pieces stay continuous along an arc in the uniformity region.
    SaddleState prev = phi_psi({kU, kV, 50, cplx(kZetaBench, 0.0)});
    for (int i = 1; i <= 80; ++i) {
        const double th = 1.2 * i / 80.0;
        const SaddleState s = phi_psi({kU, kV, 50, kZetaBench * std::polar(1.0, th)});
        ASSERT_LT(std::abs(s.z_plus - prev.z_plus), 0.12);
        ASSERT_LT(std::abs(s.phi - prev.phi), 0.12);
        ASSERT_LT(std::abs(s.psi - prev.psi), 0.12);
        prev = s;
    }
}

TEST(Hyp1f1Uniform, NoOverflowAtHugeNa) {
    const LogComplex r = hyp1f1_uniform({kU, kV, 10000, cplx(2.0, 0.0)});
    EXPECT_TRUE(std::isfinite(r.log_mag));
    EXPECT_TRUE(std::isfinite(r.phase));
    EXPECT_GT(r.log_mag, 1e4);  // exponentially large value, finite log
}

TEST(Hyp1f1Uniform, RegionPolicing) {
    EXPECT_THROW(hyp1f1_uniform({kU, kV, 50, cplx(-1.3, 0.5)}), domain_error);
    EXPECT_NO_THROW(hyp1f1_uniform({kU, kV, 50, cplx(-1.2, 0.5)}));
}
