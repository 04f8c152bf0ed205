#pragma once

// Limit theory for the eigenvalues of F = (B/n2)^{-1} A/nA under spiked
// alternatives: bulk support edges, the phase-transition threshold, the
// almost-sure limits and Gaussian variances of separated eigenvalues, and
// two Stieltjes transforms with the derivative identities the saddle-point
// machinery needs.

#include <cmath>
#include <cstddef>
#include <limits>

#include "fratio/errors.hpp"
#include "fratio/types.hpp"

namespace fratio {

struct AspectRatios {
    double c1;
    double c2;
    double r;        // sqrt(c1 + c2 - c1*c2)
    double b_minus;  // lower bulk edge ((1-r)/(1-c2))^2
    double b_plus;   // upper bulk edge ((1+r)/(1-c2))^2
    double h_bar;    // phase transition (c2+r)/(1-c2) = sqrt(b_plus) - 1

    AspectRatios(double c1_, double c2_) : c1(c1_), c2(c2_) {
        if (!(c1 > 0.0 && c1 < 1.0 && c2 > 0.0 && c2 < 1.0))
            throw config_error("AspectRatios: c1, c2 must lie in (0,1)");
        const long double r2 = static_cast<long double>(c1) + c2 - static_cast<long double>(c1) * c2;
        const long double rl = std::sqrt(r2);
        const long double om = 1.0L - c2;
        r = static_cast<double>(rl);
        b_minus = static_cast<double>(((1.0L - rl) / om) * ((1.0L - rl) / om));
        b_plus = static_cast<double>(((1.0L + rl) / om) * ((1.0L + rl) / om));
        h_bar = static_cast<double>((c2 + rl) / om);
    }

    // Second (negative) root of h^2 - c2(1+h)^2 - c1 = (1-c2)(h-h_bar)(h-h_low).
    double h_low() const { return (c2 - r) / (1.0 - c2); }
};

struct SupportEdges {
    double b_minus;
    double b_plus;
    double r;
};

inline SupportEdges support_edges(double c1, double c2) {
    const AspectRatios a(c1, c2);
    return {a.b_minus, a.b_plus, a.r};
}

inline double phase_threshold(double c1, double c2) {
    return AspectRatios(c1, c2).h_bar;
}

// Almost-sure limit of a separated sample eigenvalue with population spike h.
inline double spike_limit(double h, double c1, double c2) {
    const AspectRatios a(c1, c2);
    if (!(h > a.h_bar))
        throw domain_error("spike_limit: sub-critical spike has no separated limit");
    const long double hl = h;
    const long double num = (hl + c1) * (hl + 1.0L);
    const long double den = hl - c2 * (hl + 1.0L);
    return static_cast<double>(num / den);
}

// Finite-sample centering: the limit formula with the aspect ratios replaced
// by p/n1 and p/n2.
inline double spike_centering(double h, const ModelDims& dims) {
    dims.validate();
    const long double cp1 = static_cast<long double>(dims.p) / dims.n1;
    const long double cp2 = static_cast<long double>(dims.p) / dims.n2;
    const long double hl = h;
    const long double den = hl - cp2 * (hl + 1.0L);
    if (!(den > 0.0L))
        throw domain_error("spike_centering: centering formula pole (h too small for c_p2)");
    return static_cast<double>((hl + cp1) * (hl + 1.0L) / den);
}

// d x_p / d h at fixed finite-p aspect ratios (quotient rule on the
// centering formula); used by delta-method confidence intervals.
inline double spike_centering_derivative(double h, const ModelDims& dims) {
    dims.validate();
    const long double cp1 = static_cast<long double>(dims.p) / dims.n1;
    const long double cp2 = static_cast<long double>(dims.p) / dims.n2;
    const long double hl = h;
    const long double N = (hl + cp1) * (hl + 1.0L);
    const long double D = hl - cp2 * (hl + 1.0L);
    if (!(D > 0.0L)) throw domain_error("spike_centering_derivative: formula pole");
    const long double Np = 2.0L * hl + 1.0L + cp1;
    const long double Dp = 1.0L - cp2;
    return static_cast<double>((Np * D - N * Dp) / (D * D));
}

// Asymptotic variance of sqrt(p)(lambda_1 - x_p1) for a separated spike.
// The factor (h^2 - c2(1+h)^2 - c1) is evaluated in the product form
// (1-c2)(h-h_bar)(h-h_low), which is exact and cancellation-free near the
// phase transition.
inline double asymptotic_variance(double h, double c1, double c2, Setting setting) {
    const AspectRatios a(c1, c2);
    if (!(h > a.h_bar)) throw domain_error("asymptotic_variance: spike must exceed threshold");
    const long double hl = h;
    const long double c1l = c1, c2l = c2;
    const long double one_m_c2 = 1.0L - c2l;
    const long double rl = std::sqrt(c1l + c2l - c1l * c2l);
    const long double h_bar_l = (c2l + rl) / one_m_c2;
    const long double h_low_l = (c2l - rl) / one_m_c2;
    const long double bracket = one_m_c2 * (hl - h_bar_l) * (hl - h_low_l);
    const long double den = hl - c2l * (1.0L + hl);  // sign-flipped (c2-h+c2 h); 4th power
    long double scale2;  // r^2 for Setting 1, t^2 for Setting 2
    if (setting == Setting::CovarianceSpike) {
        scale2 = rl * rl;
    } else {
        scale2 = c1l + c2l - c1l * (hl * hl - c1l) / ((1.0L + hl) * (1.0L + hl));
    }
    const long double num = 2.0L * scale2 * hl * hl * (1.0L + hl) * (1.0L + hl) * bracket;
    return static_cast<double>(num / (den * den * den * den));
}

struct StieltjesPoint {
    double x;
    double m0;        // m_x(0)
    double mprime0;   // d m_x(z)/dz at z = 0
    double dm0_dx;    // d m_x(0)/dx
};

// Residual of the defining fixed-point equation at z = 0:
//   1/m = -x/(1 - c2 x m) + c1 m/(1 + c1 m) * [ -x/(1 - c2 x m) ] ... cleared
// to the quadratic x r^2 m^2 + (x(1-c2)+c1-1) m + 1 = 0.  Exposed for
// residual-style property tests.
inline double stieltjes_quadratic_residual(double m, double x, double c1, double c2) {
    const long double r2 = static_cast<long double>(c1) + c2 - static_cast<long double>(c1) * c2;
    const long double res = static_cast<long double>(x) * r2 * m * m +
                            (static_cast<long double>(x) * (1.0L - c2) + c1 - 1.0L) * m + 1.0L;
    return static_cast<double>(res);
}

// m_x(0) together with its z- and x-derivatives, for x above the bulk.
inline StieltjesPoint stieltjes_mx0(double x, double c1, double c2) {
    const AspectRatios a(c1, c2);
    if (!(x > a.b_plus)) throw domain_error("stieltjes_mx0: x must exceed the upper edge");

    const long double r2 = static_cast<long double>(a.r) * a.r;
    const long double A = static_cast<long double>(x) * r2;
    const long double B = static_cast<long double>(x) * (1.0L - c2) + c1 - 1.0L;
    const long double disc = B * B - 4.0L * A;
    if (!(disc > 0.0L))
        throw domain_error("stieltjes_mx0: x inside the bulk (negative discriminant)");
    // B > 0 for all x > b_plus; smaller-magnitude root, stable form.
    const long double m = -2.0L / (B + std::sqrt(disc));

    // Implicit differentiation of the fixed-point equation.
    const long double g = 1.0L - c2 * x * m;        // (1 - c2 x m)
    const long double e = 1.0L + c1 * m;            // (1 + c1 m)
    const long double denom = 1.0L / (m * m) - c2 * static_cast<long double>(x) * x / (g * g) -
                              c1 / (e * e);
    const long double mprime0 = 1.0L / denom;
    const long double dm0_dx = mprime0 / (g * g);

    StieltjesPoint out;
    out.x = x;
    out.m0 = static_cast<double>(m);
    out.mprime0 = static_cast<double>(mprime0);
    out.dm0_dx = static_cast<double>(dm0_dx);
    return out;
}

// Density of the limiting bulk law of the F eigenvalues.
inline double wachter_pdf(double lambda, double c1, double c2) {
    const AspectRatios a(c1, c2);
    if (!(lambda > a.b_minus && lambda < a.b_plus)) return 0.0;
    const double num = std::sqrt((a.b_plus - lambda) * (lambda - a.b_minus));
    return (1.0 - c2) / (2.0 * M_PI) * num / (lambda * (c1 + c2 * lambda));
}

namespace detail {

// Romberg integration on [lo, hi]; the integrands used here are smooth, so
// this converges fast.  Relative tolerance on the extrapolated value.
template <typename F>
double romberg(F&& f, double lo, double hi, double rel_tol, int max_level = 20) {
    double table[24][24];
    double h = hi - lo;
    table[0][0] = 0.5 * h * (f(lo) + f(hi));
    for (int i = 1; i <= max_level; ++i) {
        h *= 0.5;
        double sum = 0.0;
        const std::size_t n_new = std::size_t(1) << (i - 1);
        for (std::size_t j = 0; j < n_new; ++j)
            sum += f(lo + (2.0 * static_cast<double>(j) + 1.0) * h);
        table[i][0] = 0.5 * table[i - 1][0] + h * sum;
        double pow4 = 1.0;
        for (int m = 1; m <= i; ++m) {
            pow4 *= 4.0;
            table[i][m] = table[i][m - 1] + (table[i][m - 1] - table[i - 1][m - 1]) / (pow4 - 1.0);
        }
        if (i >= 4) {
            const double cur = table[i][i], prev = table[i - 1][i - 1];
            const double scale = std::max(std::abs(cur), 1e-300);
            if (std::abs(cur - prev) <= rel_tol * scale) return cur;
        }
    }
    return table[max_level][max_level];
}

} // namespace detail

struct WachterTransform {
    double x;
    double m;
};

// Stieltjes transform of the bulk law at a real point right of the support,
// by quadrature with lambda = b- + (b+ - b-) sin^2(theta) (the substitution
// absorbs both square-root edge factors, leaving a smooth integrand).
inline WachterTransform stieltjes_wachter(double x, double c1, double c2) {
    const AspectRatios a(c1, c2);
    if (!(x > a.b_plus)) throw domain_error("stieltjes_wachter: x must exceed the upper edge");
    const double w = a.b_plus - a.b_minus;
    const double pref = (1.0 - c2) / M_PI * w * w;
    auto f = [&](double th) {
        const double s = std::sin(th), c = std::cos(th);
        const double lam = a.b_minus + w * s * s;
        return pref * s * s * c * c / (lam * (c1 + c2 * lam) * (lam - x));
    };
    const double m = detail::romberg(f, 0.0, 0.5 * M_PI, 1e-12);
    return {x, m};
}

// Total mass of the bulk density by the same substitution (quadrature
// cross-check used by the verification suite).
inline double wachter_total_mass(double c1, double c2) {
    const AspectRatios a(c1, c2);
    const double w = a.b_plus - a.b_minus;
    const double pref = (1.0 - c2) / M_PI * w * w;
    auto f = [&](double th) {
        const double s = std::sin(th), c = std::cos(th);
        const double lam = a.b_minus + w * s * s;
        return pref * s * s * c * c / (lam * (c1 + c2 * lam));
    };
    return detail::romberg(f, 0.0, 0.5 * M_PI, 1e-12);
}

} // namespace fratio
