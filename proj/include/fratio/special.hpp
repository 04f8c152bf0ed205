#pragma once

// Confluent hypergeometric machinery: a direct Kummer-series evaluator for
// moderate parameters and the large-nA uniform asymptotic built from the
// saddle point z_plus of the integral representation, with the branch
// conventions the contour integration relies on (principal logarithms,
// square root fixed by sqrt(-1) = -i).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

#include "fratio/errors.hpp"
#include "fratio/logscale.hpp"
#include "fratio/types.hpp"

namespace fratio {

using cplx = std::complex<double>;

struct KummerParams {
    cplx a;
    cplx b;
    cplx z;
};

namespace detail {

inline bool is_nonpositive_integer(cplx w) {
    if (w.imag() != 0.0) return false;
    const double re = w.real();
    return re <= 0.0 && re == std::floor(re);
}

// Kummer series with Kahan-compensated accumulation and periodic rescaling
// so partial sums never overflow; returns log-scale value.
inline LogComplex kummer_series(cplx a, cplx b, cplx z) {
    double offset = 0.0;  // log of the factor divided out so far
    cplx sum(1.0, 0.0), comp(0.0, 0.0), term(1.0, 0.0);
    int calm = 0;
    const int max_terms = 40000;
    for (int n = 0; n < max_terms; ++n) {
        term *= (a + static_cast<double>(n)) /
                ((b + static_cast<double>(n)) * (static_cast<double>(n) + 1.0)) * z;
        // Kahan step.
        const cplx y = term - comp;
        const cplx t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) {
            if (++calm >= 2) return {offset + std::log(std::abs(sum)), std::arg(sum)};
        } else {
            calm = 0;
        }
        if (std::abs(sum) > 1e280 || std::abs(term) > 1e280) {
            const double s = 1e-280;
            sum *= s;
            comp *= s;
            term *= s;
            offset += 280.0 * M_LN10;
        }
    }
    throw numerical_error("hyp1f1_series: no convergence within term budget");
}

} // namespace detail

// 1F1(a, b; z) in log scale.  Declared range: |z| <= 50 for general complex
// arguments; real-positive z with real-positive a, b is an all-positive
// series (no cancellation), accepted for any z.  Re z < 0 is routed through
// the Kummer transform 1F1(a,b;z) = e^z 1F1(b-a,b;-z).
inline LogComplex hyp1f1_series(const KummerParams& p) {
    if (detail::is_nonpositive_integer(p.b))
        throw domain_error("hyp1f1_series: b must not be a non-positive integer");
    if (std::abs(p.a) > 500.0 || std::abs(p.b) > 500.0)
        throw range_error("hyp1f1_series: parameter outside declared range");
    const bool all_positive = p.z.imag() == 0.0 && p.z.real() > 0.0 && p.a.imag() == 0.0 &&
                              p.a.real() > 0.0 && p.b.imag() == 0.0 && p.b.real() > 0.0;
    if (std::abs(p.z) > 50.0 && !all_positive)
        throw range_error("hyp1f1_series: |z| outside declared range");

    if (p.z.real() < 0.0) {
        LogComplex w = detail::kummer_series(p.b - p.a, p.b, -p.z);
        w.log_mag += p.z.real();
        w.phase += p.z.imag();
        return w;
    }
    return detail::kummer_series(p.a, p.b, p.z);
}

// ---------------------------------------------------------------------------
// Saddle-point quantities
// ---------------------------------------------------------------------------

struct UniformAsymInput {
    double u;
    double v;
    int nA;
    cplx zeta;

    static UniformAsymInput from_dims(const ModelDims& dims, cplx zeta) {
        dims.validate();
        const double na = static_cast<double>(dims.n_a());
        return {(na + dims.n2 - dims.p) / (2.0 * na), (na - dims.p) / (2.0 * na),
                dims.n_a(), zeta};
    }
};

enum class Branch { Principal, Other };

// Saddle point z_plus(zeta): the root of z^2 + (v - zeta) z - u zeta = 0
// with the principal square root on Re zeta >= v - 2u and the other branch
// beyond it.
inline cplx zplus(cplx zeta, double u, double v, Branch branch) {
    if (!(u > v)) throw config_error("zplus: requires u > v");
    const cplx disc = (zeta - v) * (zeta - v) + 4.0 * u * zeta;
    const double scale = std::norm(zeta) + (u + v) * (u + v) + 1.0;
    if (std::abs(disc) < 1e-15 * scale)
        throw singularity_error("zplus: zeta is at a branch point of the saddle");
    cplx s = std::sqrt(disc);
    if (branch == Branch::Other) s = -s;
    return 0.5 * ((zeta - v) + s);
}

inline Branch zplus_branch_for(cplx zeta, double u, double v) {
    return zeta.real() >= v - 2.0 * u ? Branch::Principal : Branch::Other;
}

inline cplx zplus_auto(cplx zeta, double u, double v) {
    return zplus(zeta, u, v, zplus_branch_for(zeta, u, v));
}

// d z_plus / d zeta (derivative of the chosen root along a path).
inline cplx dzplus_dzeta(cplx z_plus, double u, double v) {
    (void)v;
    const cplx num = (u + z_plus) * (u + z_plus);
    const cplx den = u * v + 2.0 * u * z_plus + z_plus * z_plus;
    return num / den;
}

// Inverse map zeta(z_plus) and its derivative; single-valued, used to
// parameterize contours directly in the z_plus plane.
inline cplx zeta_of_zplus(cplx z_plus, double u, double v) {
    return z_plus * (z_plus + v) / (z_plus + u);
}

inline cplx dzeta_dzplus(cplx z_plus, double u, double v) {
    const cplx zu = z_plus + u;
    return (z_plus * z_plus + 2.0 * u * z_plus + u * v) / (zu * zu);
}

struct SaddleState {
    cplx z_plus;
    cplx zeta;
    cplx phi;    // exponent function phi(zeta)
    cplx psi;    // amplitude function psi(zeta)
    double c_pn; // log of the Gamma-ratio constant C(p,n)
};

namespace detail {

// Square root with the branch fixed by sqrt(-1) = -i: principal on the
// right half plane, lower sheet continuation across the negative axis.
inline cplx sqrt_minus_i(cplx w) {
    return cplx(0.0, -1.0) * std::sqrt(-w);
}

inline double c_pn_log(double u, double v, int nA) {
    const double na = static_cast<double>(nA);
    return std::lgamma(na * v + 1.0) + std::lgamma(na * (u - v) + 1.0) -
           std::lgamma(na * u + 1.0);
}

} // namespace detail

// phi, psi and the Gamma constant for a given saddle location.  No branch
// selection happens here: z_plus is taken as given, so contour code can walk
// the z_plus plane directly and stay on one sheet.
inline SaddleState saddle_from_zplus(cplx z_plus, double u, double v, int nA) {
    if (!(u > v)) throw config_error("saddle_from_zplus: requires u > v");
    SaddleState s;
    s.z_plus = z_plus;
    s.zeta = zeta_of_zplus(z_plus, u, v);
    s.phi = (u - v) * std::log(u - v) + v * std::log(z_plus + v) -
            u * std::log(z_plus + u) - z_plus;
    const cplx zmz = z_plus - s.zeta;
    const cplx w = u / (z_plus * z_plus) - (u - v) / (zmz * zmz);
    s.psi = 1.0 / (zmz * detail::sqrt_minus_i(w));
    s.c_pn = detail::c_pn_log(u, v, nA);
    return s;
}

inline SaddleState phi_psi(const UniformAsymInput& inp) {
    if (inp.nA <= 0) throw config_error("phi_psi: nA must be positive");
    const cplx zeta = inp.zeta;
    if (std::abs(zeta) < 1e-12)
        throw domain_error("phi_psi: zeta too close to the origin");
    if (zeta.imag() == 0.0 && zeta.real() < 0.0)
        throw domain_error("phi_psi: zeta on the negative real axis");
    const cplx zp = zplus_auto(zeta, inp.u, inp.v);
    SaddleState s = saddle_from_zplus(zp, inp.u, inp.v, inp.nA);
    s.zeta = zeta;  // exact input, not the round-tripped value
    return s;
}

// Uniform large-nA approximation of 1F1(nA u + 1, nA v + 1; nA zeta) in log
// scale: C(p,n) e^{-nA phi} psi / (sqrt(2 pi nA) i).
inline LogComplex hyp1f1_uniform_state(const SaddleState& s, int nA) {
    const double na = static_cast<double>(nA);
    LogComplex out;
    out.log_mag = s.c_pn - na * s.phi.real() + std::log(std::abs(s.psi)) -
                  0.5 * std::log(2.0 * M_PI * na);
    out.phase = -na * s.phi.imag() + std::arg(s.psi) - 0.5 * M_PI;
    if (!std::isfinite(out.log_mag))
        throw numerical_error("hyp1f1_uniform: non-finite log magnitude");
    return out;
}

inline LogComplex hyp1f1_uniform(const UniformAsymInput& inp) {
    if (inp.zeta.real() < inp.v - 2.0 * inp.u)
        throw domain_error("hyp1f1_uniform: zeta outside the uniformity region");
    return hyp1f1_uniform_state(phi_psi(inp), inp.nA);
}

} // namespace fratio
