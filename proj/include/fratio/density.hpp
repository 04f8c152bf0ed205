#pragma once

// Joint eigenvalue density ratios for the spiked F models, evaluated two
// independent ways:
//   * exact complex quadrature of the single-spike contour integral over a
//     path that hugs the top eigenvalue and escapes to -infinity in the
//     upper half plane (mirrored below; the full integral is 2i Im W), and
//   * the Laplace endpoint approximation, whose curvature constant H0 has a
//     closed form in the aspect ratios.
// Only ratios across spike values are exposed: the spectrum-dependent
// normalization constant cancels.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "fratio/analytics.hpp"
#include "fratio/errors.hpp"
#include "fratio/logscale.hpp"
#include "fratio/special.hpp"
#include "fratio/types.hpp"

namespace fratio {

inline double to_lambda_tilde(double lambda, double alpha_p) {
    if (!(lambda >= 0.0) || !(alpha_p > 0.0))
        throw argument_error("to_lambda_tilde: need lambda >= 0 and alpha_p > 0");
    return alpha_p * lambda / (1.0 + alpha_p * lambda);
}

struct DensityInput {
    std::vector<double> lambda_tilde;  // descending, all in (0,1)
    double alpha_p;                    // nA / n2
    ModelDims dims;
    int n;                             // nA + n2

    void validate() const {
        dims.validate();
        if (lambda_tilde.size() != static_cast<std::size_t>(dims.p))
            throw config_error("DensityInput: need p transformed eigenvalues");
        for (std::size_t j = 0; j < lambda_tilde.size(); ++j) {
            if (!(lambda_tilde[j] > 0.0 && lambda_tilde[j] < 1.0))
                throw config_error("DensityInput: lambda_tilde outside (0,1)");
            if (j > 0 && !(lambda_tilde[j] <= lambda_tilde[j - 1]))
                throw config_error("DensityInput: lambda_tilde not descending");
        }
    }
};

inline DensityInput density_input_from(const EigenSample& s) {
    DensityInput inp;
    inp.dims = s.dims;
    inp.alpha_p = s.dims.alpha_p();
    inp.n = s.dims.n_total();
    inp.lambda_tilde.reserve(s.values.size());
    for (double lam : s.values)
        inp.lambda_tilde.push_back(to_lambda_tilde(lam, inp.alpha_p));
    inp.validate();
    return inp;
}

enum class ContourKind { SettingOneK, SettingTwoC };

struct ContourSpec {
    ContourKind kind;
    double x_tilde0;   // real abscissa separating the top eigenvalue from the bulk
    double epsilon;    // half-circle radius around lambda_tilde_1
    int node_scale;    // >= 1; multiplies every per-segment node count
};

// Default contour: x0 at the geometric midpoint between the (transformed)
// bulk edge and the top eigenvalue, epsilon at 5% of the admissible band.
// The band floor is max(edge, lambda_tilde_2): for genuine samples the bulk
// reaches the edge and this is the 5%-of-top-gap rule; a synthetic spectrum
// with its bulk far below the edge still gets a separating contour.
inline ContourSpec make_contour_spec(const DensityInput& inp, ContourKind kind) {
    inp.validate();
    const double l1 = inp.lambda_tilde[0];
    const double l2 = inp.lambda_tilde[1];
    const AspectRatios a(inp.dims.c1p(), inp.dims.c2p());
    const double edge = to_lambda_tilde(a.b_plus, inp.alpha_p);
    const double lower = std::max(edge, l2);
    if (!(lower < l1))
        throw geometry_error("make_contour_spec: top eigenvalue not separated from bulk");
    const double x0 = std::sqrt(lower * l1);
    const double eps = 0.05 * (l1 - lower);
    if (!(x0 < l1 - 2.0 * eps) || !(x0 > l2))
        throw geometry_error("make_contour_spec: no admissible separating abscissa");
    return {kind, x0, eps, 1};
}

// Draw-based contour floor: separates the top eigenvalue from the observed
// second eigenvalue rather than from the theoretical bulk edge, so
// likelihood-ratio callers can evaluate near-critical spectra that
// make_contour_spec refuses. Narrow gaps cost extra node doubling; only a
// genuinely pinched top pair refuses.
inline ContourSpec make_separating_spec(const DensityInput& inp, ContourKind kind) {
    inp.validate();
    const double l1 = inp.lambda_tilde[0];
    const double l2 = inp.lambda_tilde[1];
    if (!(l2 < l1 * (1.0 - 1e-9)))
        throw geometry_error("make_separating_spec: top pair is pinched");
    const double x0 = std::sqrt(l2 * l1);
    const double eps = 0.05 * (l1 - l2);
    if (!(x0 < l1 - 2.0 * eps) || !(x0 > l2))
        throw geometry_error("make_separating_spec: no admissible separating abscissa");
    return {kind, x0, eps, 1};
}

struct ContourResult {
    LogComplex value;        // the full closed-contour integral
    LogComplex upper_half;   // W, the integral over the upper half path
    double k1_log_mag;       // per-segment log magnitudes (diagnostics)
    double k2_log_mag;
    double k34_log_mag;      // escape segments combined
    double c4_bound_log;     // magnitude bound for the far tail (S2) / -inf (S1)
    int nodes_used;
};

namespace detail {

// Gauss-Legendre nodes and weights on [-1,1], cached per order.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    static std::vector<std::vector<double>> cache_x(1), cache_w(1);
    if (n <= 0) throw argument_error("gauss_legendre: order must be positive");
    if (static_cast<int>(cache_x.size()) > n && !cache_x[static_cast<std::size_t>(n)].empty()) {
        x = cache_x[static_cast<std::size_t>(n)];
        w = cache_w[static_cast<std::size_t>(n)];
        return;
    }
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (t * p0 - p1) / (t * t - 1.0);
            const double dt = p0 / pp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[static_cast<std::size_t>(i)] = -t;
        x[static_cast<std::size_t>(n - 1 - i)] = t;
        w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - t * t) * pp * pp);
        w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
    }
    if (static_cast<int>(cache_x.size()) <= n) {
        cache_x.resize(static_cast<std::size_t>(n) + 1);
        cache_w.resize(static_cast<std::size_t>(n) + 1);
    }
    cache_x[static_cast<std::size_t>(n)] = x;
    cache_w[static_cast<std::size_t>(n)] = w;
}

// Integrates exp(logf(t)) over [a,b] with `panels` equal panels of GL order
// `order`, accumulating into `acc`.  Tracks the running peak log-magnitude
// and enforces phase continuity between consecutive nodes (branch errors in
// the multivalued product show up as near-pi jumps).
template <typename G>
void integrate_segment(double a, double b, int panels, int order, G&& logf, LogSum& acc,
                       double& peak_log, double& prev_phase, bool phase_fresh) {
    std::vector<double> gx, gw;
    gauss_legendre(order, gx, gw);
    bool have_prev = !phase_fresh;
    for (int pnl = 0; pnl < panels; ++pnl) {
        const double lo = a + (b - a) * pnl / panels;
        const double hi = a + (b - a) * (pnl + 1) / panels;
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        // First pass: evaluate logs, find the panel peak.
        std::vector<cplx> lg(static_cast<std::size_t>(order));
        double m = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < order; ++i) {
            const cplx L = logf(mid + half * gx[static_cast<std::size_t>(i)]);
            lg[static_cast<std::size_t>(i)] = L;
            m = std::max(m, L.real());
            if (have_prev) {
                const double dphi = std::remainder(L.imag() - prev_phase, 2.0 * M_PI);
                if (std::abs(dphi) > 2.0)
                    throw branch_error("contour quadrature: phase discontinuity between nodes");
            }
            prev_phase = L.imag();
            have_prev = true;
        }
        peak_log = std::max(peak_log, m);
        if (!std::isfinite(m)) continue;  // entire panel is zero
        cplx s(0.0, 0.0);
        for (int i = 0; i < order; ++i)
            s += gw[static_cast<std::size_t>(i)] *
                 std::exp(lg[static_cast<std::size_t>(i)] - m);
        s *= half;  // signed half-width folds orientation in
        if (s != cplx(0.0, 0.0))
            acc.add(LogComplex{m + std::log(std::abs(s)), std::arg(s)});
    }
}

// log of prod_{j >= start} (z - lam_j)^{-1/2} with principal logs and the
// +i0 convention on the real axis (atan2(+0, negative) = +pi).
struct EigProduct {
    Eigen::ArrayXd lam;

    explicit EigProduct(const std::vector<double>& lt)
        : lam(Eigen::Map<const Eigen::ArrayXd>(lt.data(),
                                               static_cast<Eigen::Index>(lt.size()))) {}

    cplx log_partial(cplx z, int start) const {
        const double x = z.real();
        const double y = z.imag() + 0.0;  // normalize -0.0 to +0.0
        const auto dx = (x - lam.tail(lam.size() - start)).eval();
        const double re = -0.25 * (dx.square() + y * y).log().sum();
        double im = 0.0;
        for (Eigen::Index i = 0; i < dx.size(); ++i) im += std::atan2(y, dx[i]);
        return {re, -0.5 * im};
    }
};

struct SegmentTally {
    LogSum acc;
    double peak = -std::numeric_limits<double>::infinity();
    double phase = 0.0;
};

// Shared geometry of the upper-half contour: half circle K1, real segment
// K2 with the square-root-absorbing substitution, and caller-supplied escape
// segments.  `log_rest` is the log of the integrand without the j = 1
// factor; `log_full` includes it.
struct UpperPath {
    double l1, x0, eps;
    std::function<cplx(cplx)> log_rest;
    std::function<cplx(cplx)> log_full;

    LogComplex half_circle(int panels, int order, double& peak) const {
        SegmentTally t;
        // z = l1 + eps e^{i theta}; factor (z-l1)^{-1/2} dz = i sqrt(eps)
        // e^{i theta/2} d theta.
        auto g = [&](double th) -> cplx {
            const cplx z = l1 + eps * std::polar(1.0, th);
            return log_rest(z) + cplx(0.5 * std::log(eps), 0.5 * th + 0.5 * M_PI);
        };
        integrate_segment(0.0, M_PI, panels, order, g, t.acc, t.peak, t.phase, true);
        peak = t.peak;
        return t.acc.result();
    }

    LogComplex real_segment(int panels, int order, double& peak) const {
        SegmentTally t;
        // z = l1 - s^2: the (z - l1)^{-1/2} dz factor becomes 2 e^{i pi/2} ds
        // exactly, leaving a smooth real-log integrand.
        auto g = [&](double s) -> cplx {
            return log_rest(cplx(l1 - s * s, 0.0)) + cplx(M_LN2, 0.5 * M_PI);
        };
        integrate_segment(std::sqrt(eps), std::sqrt(l1 - x0), panels, order, g, t.acc,
                          t.peak, t.phase, true);
        peak = t.peak;
        return t.acc.result();
    }
};

inline LogComplex close_contour(const LogComplex& w) {
    // Full contour = W - conj(W) = 2i Im(W).
    const double s = std::sin(w.phase);
    if (std::abs(s) < 1e-12)
        throw numerical_error("contour integral: catastrophic cancellation closing contour");
    return {w.log_mag + std::log(2.0 * std::abs(s)), s > 0.0 ? 0.5 * M_PI : -0.5 * M_PI};
}

inline double wrapped_abs(double phase_diff) {
    return std::abs(std::remainder(phase_diff, 2.0 * M_PI));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Setting 1: contour K with the closed-form 1F0 factor
// ---------------------------------------------------------------------------

namespace detail {

inline ContourResult contour_eval_s1(const DensityInput& inp, double h,
                                     const ContourSpec& spec, double eps) {
    const int p = inp.dims.p;
    const double q = h / (1.0 + h);
    const double expo = 0.5 * (p - inp.n - 2);
    EigProduct prod(inp.lambda_tilde);
    const double l1 = inp.lambda_tilde[0];
    const double x0 = spec.x_tilde0;
    if (!(x0 > inp.lambda_tilde[1] && x0 < l1 - eps))
        throw geometry_error("contour_integral_s1: contour touches the spectrum");

    auto log_f0 = [&](cplx z) -> cplx { return expo * std::log(cplx(1.0, 0.0) - q * z); };
    UpperPath path;
    path.l1 = l1;
    path.x0 = x0;
    path.eps = eps;
    path.log_rest = [&](cplx z) -> cplx { return log_f0(z) + prod.log_partial(z, 1); };
    path.log_full = [&](cplx z) -> cplx { return log_f0(z) + prod.log_partial(z, 0); };

    const int ns = spec.node_scale;
    ContourResult out;
    out.nodes_used = 0;

    double peak1 = 0, peak2 = 0;
    const LogComplex w2 = path.real_segment(4, 24 * ns, peak2);
    const LogComplex w1 = path.half_circle(2, 24 * ns, peak1);
    out.nodes_used += 4 * 24 * ns + 2 * 24 * ns;

    // K3: vertical ascent at Re z = x0 to height x0.
    SegmentTally t3;
    auto g3 = [&](double t) -> cplx {
        return path.log_full(cplx(x0, t)) + cplx(0.0, 0.5 * M_PI);
    };
    // Phase velocity on the escape segments is set by the 1F0 exponent,
    // which grows like n, not p.
    const int order3 = std::max(48, inp.n / 2) * ns;
    integrate_segment(0.0, x0, 6, order3, g3, t3.acc, t3.peak, t3.phase, true);
    out.nodes_used += 6 * order3;

    // K4: horizontal escape at Im z = x0, truncated where the integrand is
    // 16 decades below the K2 peak.
    double t_end = -1.0;
    while (path.log_full(cplx(t_end, x0)).real() > peak2 - 40.0) {
        t_end *= 2.0;
        if (t_end < -1e4)
            throw numerical_error("contour_integral_s1: escape segment does not decay");
    }
    SegmentTally t4;
    auto g4 = [&](double tau) -> cplx { return path.log_full(cplx(tau, x0)); };
    const int order4 = std::max(64, inp.n) * ns;
    const int panels4 = 8;
    // Note a > b: the signed panel width implements the leftward direction.
    integrate_segment(x0, t_end, panels4, order4, g4, t4.acc, t4.peak, t4.phase, true);
    out.nodes_used += panels4 * order4;

    LogSum w;
    w.add(w1);
    w.add(w2);
    const LogComplex w3 = t3.acc.result();
    const LogComplex w4 = t4.acc.result();
    w.add(w3);
    w.add(w4);
    out.upper_half = w.result();
    out.value = close_contour(out.upper_half);
    out.k1_log_mag = w1.log_mag;
    out.k2_log_mag = w2.log_mag;
    LogSum e;
    e.add(w3);
    e.add(w4);
    out.k34_log_mag = e.result().log_mag;
    out.c4_bound_log = -std::numeric_limits<double>::infinity();
    return out;
}

// Node-doubling convergence wrapper plus Richardson combination over the
// half-circle radius (the exact value is radius-independent; the pair of
// radii is a guard against the O(sqrt(eps)) singular-arc error).
template <typename Eval>
ContourResult converge_and_extrapolate(const ContourSpec& spec, Eval&& eval) {
    auto stable = [&](double eps) -> ContourResult {
        ContourResult prev;
        bool have_prev = false;
        int used = 0;
        for (int dbl = 0; dbl <= 5; ++dbl) {
            ContourSpec s2 = spec;
            s2.node_scale = spec.node_scale << dbl;
            ContourResult cur;
            try {
                cur = eval(s2, eps);
            } catch (const branch_error&) {
                // Undersampled phase at this node count; a finer grid may
                // still track it. Fatal only at the finest scale.
                if (dbl == 5) throw;
                have_prev = false;
                continue;
            }
            used += cur.nodes_used;
            if (have_prev) {
                const double d = std::abs(cur.value.log_mag - prev.value.log_mag) +
                                 wrapped_abs(cur.value.phase - prev.value.phase);
                if (d < 1e-6) {
                    ContourResult out = cur;
                    out.nodes_used = used;
                    return out;
                }
            }
            prev = cur;
            have_prev = true;
        }
        throw numerical_error("contour integral: node doubling failed to stabilize");
    };
    const ContourResult full = stable(spec.epsilon);
    const ContourResult half = stable(0.5 * spec.epsilon);
    const double ref = std::max(full.value.log_mag, half.value.log_mag);
    const cplx v1 = std::polar(std::exp(full.value.log_mag - ref), full.value.phase);
    const cplx v2 = std::polar(std::exp(half.value.log_mag - ref), half.value.phase);
    const cplx comb = (M_SQRT2 * v2 - v1) / (M_SQRT2 - 1.0);
    ContourResult out = half;
    out.value = LogComplex{ref + std::log(std::abs(comb)), std::arg(comb)};
    out.nodes_used += full.nodes_used;
    return out;
}

} // namespace detail

inline ContourResult contour_integral_s1(const DensityInput& inp, double h,
                                         const ContourSpec& spec) {
    inp.validate();
    if (!(h > 0.0)) throw argument_error("contour_integral_s1: h must be positive");
    return detail::converge_and_extrapolate(
        spec, [&](const ContourSpec& s, double eps) {
            return detail::contour_eval_s1(inp, h, s, eps);
        });
}

// ---------------------------------------------------------------------------
// Setting 2: contour C with the 1F1 factor via the uniform asymptotic
// ---------------------------------------------------------------------------

namespace detail {

inline ContourResult contour_eval_s2(const DensityInput& inp, double h,
                                     const ContourSpec& spec, double eps) {
    const int p = inp.dims.p;
    const int na = inp.dims.n_a();
    const UniformAsymInput proto = UniformAsymInput::from_dims(inp.dims, cplx(1.0, 0.0));
    const double u = proto.u, v = proto.v;
    EigProduct prod(inp.lambda_tilde);
    const double l1 = inp.lambda_tilde[0];
    const double x0 = spec.x_tilde0;
    if (!(x0 > inp.lambda_tilde[1] && x0 < l1 - eps))
        throw geometry_error("contour_integral_s2: contour touches the spectrum");

    // 1F1 factor along C1/C2 (zeta = h z / 2 near the positive real axis).
    auto log_f1 = [&](cplx z) -> cplx {
        const cplx zeta = 0.5 * h * z;
        const cplx zp = zplus_auto(zeta, u, v);
        const LogComplex f = hyp1f1_uniform_state(saddle_from_zplus(zp, u, v, na), na);
        return {f.log_mag, f.phase};
    };
    UpperPath path;
    path.l1 = l1;
    path.x0 = x0;
    path.eps = eps;
    path.log_rest = [&](cplx z) -> cplx { return log_f1(z) + prod.log_partial(z, 1); };
    path.log_full = [&](cplx z) -> cplx { return log_f1(z) + prod.log_partial(z, 0); };

    const int ns = spec.node_scale;
    ContourResult out;
    out.nodes_used = 0;

    double peak1 = 0, peak2 = 0;
    const LogComplex w2 = path.real_segment(4, 24 * ns, peak2);
    const LogComplex w1 = path.half_circle(2, 24 * ns, peak1);
    out.nodes_used += 6 * 24 * ns;

    // C3: quarter arc in the z_plus plane, |z_plus + u| = |z0_plus + u|,
    // from the real axis (theta = 0, attaching exactly to C2's endpoint) to
    // theta = pi/2 where Re zeta = v - 2u exactly.
    const double zeta0 = 0.5 * h * x0;
    const double z0p = zplus_auto(cplx(zeta0, 0.0), u, v).real();
    const double rho = z0p + u;
    SegmentTally t3;
    auto g3 = [&](double th) -> cplx {
        const cplx zp = cplx(-u, 0.0) + rho * std::polar(1.0, th);
        const SaddleState st = saddle_from_zplus(zp, u, v, na);
        const LogComplex f = hyp1f1_uniform_state(st, na);
        const cplx z = 2.0 * st.zeta / h;
        if (z.imag() < -1e-12)
            throw geometry_error("contour_integral_s2: arc dips below the real axis");
        const cplx dz = (2.0 / h) * dzeta_dzplus(zp, u, v) *
                        (rho * std::polar(1.0, th) * cplx(0.0, 1.0));
        return cplx(f.log_mag, f.phase) + prod.log_partial(z, 0) + std::log(dz);
    };
    // The 1F1 phase turns at a rate set by nA, not p.
    const int order3 = std::max(48, p / 2 + na / 2) * ns;
    integrate_segment(0.0, 0.5 * M_PI, 6, order3, g3, t3.acc, t3.peak, t3.phase, true);
    out.nodes_used += 6 * order3;

    // C4: horizontal line Im z_plus = rho leftward from -u.  The uniform
    // asymptotic leaves its validity region here, so we only bound the
    // magnitude and require it to be negligible.
    double bound_peak = -std::numeric_limits<double>::infinity();
    double c4_bound = -std::numeric_limits<double>::infinity();
    {
        double len = 1.0;
        auto mag = [&](double tau) -> double {
            const cplx zp = cplx(-u + tau, rho);
            const SaddleState st = saddle_from_zplus(zp, u, v, na);
            const LogComplex f = hyp1f1_uniform_state(st, na);
            const cplx z = 2.0 * st.zeta / h;
            const cplx dz = (2.0 / h) * dzeta_dzplus(zp, u, v);
            return f.log_mag + prod.log_partial(z, 0).real() + std::log(std::abs(dz));
        };
        while (mag(-len) > peak2 - 40.0) {
            len *= 2.0;
            if (len > 1e4)
                throw numerical_error("contour_integral_s2: tail bound does not decay");
        }
        // Trapezoid magnitude bound.
        const int m = 200;
        double acc = 0.0;
        const double hstep = len / m;
        for (int i = 0; i <= m; ++i) {
            const double lm = mag(-hstep * i);
            bound_peak = std::max(bound_peak, lm);
        }
        for (int i = 0; i <= m; ++i) {
            const double lm = mag(-hstep * i);
            const double wgt = (i == 0 || i == m) ? 0.5 : 1.0;
            acc += wgt * std::exp(lm - bound_peak);
        }
        c4_bound = bound_peak + std::log(acc * hstep);
    }

    LogSum w;
    w.add(w1);
    w.add(w2);
    const LogComplex w3 = t3.acc.result();
    w.add(w3);
    out.upper_half = w.result();
    out.value = close_contour(out.upper_half);
    out.k1_log_mag = w1.log_mag;
    out.k2_log_mag = w2.log_mag;
    out.k34_log_mag = w3.log_mag;
    out.c4_bound_log = c4_bound;
    if (c4_bound > out.value.log_mag + std::log(1e-3))
        throw numerical_error("contour_integral_s2: far-tail bound is not negligible");
    return out;
}

} // namespace detail

inline ContourResult contour_integral_s2(const DensityInput& inp, double h,
                                         const ContourSpec& spec) {
    inp.validate();
    if (!(h > 0.0)) throw argument_error("contour_integral_s2: h must be positive");
    return detail::converge_and_extrapolate(
        spec, [&](const ContourSpec& s, double eps) {
            return detail::contour_eval_s2(inp, h, s, eps);
        });
}

// ---------------------------------------------------------------------------
// Laplace endpoint approximations
// ---------------------------------------------------------------------------

struct LaplaceResult {
    LogComplex log_value;
    double h0_curvature;                   // H0: exponent curvature constant
    std::optional<double> r0;              // Setting 2 exponent slope limit
    std::optional<double> z_pn_h0_log;     // Setting 2 amplitude constant, log scale
    double exponent_derivative_at_saddle;  // finite-p f_p'(0)
};

// Closed form for H0 at given ratios (mu0 = h0 + 1).
inline double laplace_h0_constant(double h0, double c1, double c2) {
    const AspectRatios a(c1, c2);
    if (!(h0 > a.h_bar)) throw domain_error("laplace H0: spike must be super-critical");
    const double mu0 = h0 + 1.0;
    const double sb_plus = std::sqrt(a.b_plus), sb_minus = std::sqrt(a.b_minus);
    const double num = h0 * (1.0 - c2) * (mu0 - sb_plus) * (mu0 - sb_minus) * (c1 + c2 * mu0);
    const double den = 2.0 * c1 * c2 * (h0 - c2 * mu0) * mu0 * (c1 + h0);
    return num / den;
}

namespace detail {

struct LaplaceCommon {
    double l1;
    double gap_log_sum;  // sum_{j>=2} ln(l1 - l_j)
    double h0_const;
    double fp_prime;     // finite-p exponent derivative at the endpoint
};

inline LaplaceCommon laplace_common(const DensityInput& inp, double h0) {
    inp.validate();
    const double c1 = inp.dims.c1p(), c2 = inp.dims.c2p();
    const AspectRatios a(c1, c2);
    if (!(h0 > a.h_bar))
        throw domain_error("laplace: sub-critical spike has no endpoint expansion");
    const double l1 = inp.lambda_tilde[0];
    if (!(l1 - inp.lambda_tilde[1] > 1e-4))
        throw separation_error("laplace: top eigenvalues too close for the saddle expansion");

    LaplaceCommon c;
    c.l1 = l1;
    c.gap_log_sum = 0.0;
    double inv_gap_sum = 0.0;
    for (std::size_t j = 1; j < inp.lambda_tilde.size(); ++j) {
        const double gap = l1 - inp.lambda_tilde[j];
        c.gap_log_sum += std::log(gap);
        inv_gap_sum += 1.0 / gap;
    }
    c.h0_const = laplace_h0_constant(h0, c1, c2);

    const int p = inp.dims.p;
    const double lam1 = l1 / (inp.alpha_p * (1.0 - l1));  // invert the tilde map
    const double beta_p = static_cast<double>(inp.n + 2 - p) / p;
    const double qt = h0 * (1.0 + inp.alpha_p * lam1) / (1.0 + h0 + inp.alpha_p * lam1);
    c.fp_prime = 0.5 * beta_p * qt - inv_gap_sum / (2.0 * p);
    return c;
}

} // namespace detail

inline LaplaceResult laplace_s1(const DensityInput& inp, double h0) {
    const detail::LaplaceCommon c = detail::laplace_common(inp, h0);
    const int p = inp.dims.p;
    const double q = h0 / (1.0 + h0);
    const double log_f0 = 0.5 * (p - inp.n - 2) * std::log(1.0 - q * c.l1);

    LaplaceResult r;
    r.h0_curvature = c.h0_const;
    r.exponent_derivative_at_saddle = c.fp_prime;
    r.log_value.log_mag = log_f0 + M_LN2 +
                          0.5 * (std::log(M_PI) - std::log(p * c.h0_const)) -
                          0.5 * c.gap_log_sum;
    r.log_value.phase = 0.5 * M_PI;  // the (-pi/(p H0))^{1/2} factor, root +i
    return r;
}

inline LaplaceResult laplace_s2(const DensityInput& inp, double h0) {
    const detail::LaplaceCommon c = detail::laplace_common(inp, h0);
    const int p = inp.dims.p;
    const double c1 = inp.dims.c1p(), c2 = inp.dims.c2p();
    const double mu0 = h0 + 1.0;

    const UniformAsymInput ua =
        UniformAsymInput::from_dims(inp.dims, cplx(0.5 * h0 * c.l1, 0.0));
    const SaddleState st = phi_psi(ua);

    // Z(p,n,h0) in log scale.
    const double shape = (c1 + c2 * mu0) /
                         std::sqrt(c2 * mu0 * mu0 + c1 * c1 - c1 + 2.0 * c1 * mu0);
    const double log_z = st.c_pn - 0.5 * std::log(M_PI * p) + std::log(shape);

    // Slope limit R0 from its four-term form, using the mutually consistent
    // finite-p parameter set (alpha = c2/c1 = n1/n2 here, not nA/n2).
    const double alpha = c2 / c1;
    const double x1 = (h0 + c1) * (h0 + 1.0) / (h0 - c2 * (h0 + 1.0));
    const double m_x1 = -(1.0 + h0) / (x1 * h0);
    const double oax = 1.0 + alpha * x1;
    const double r0 = c1 / (c2 * mu0) + 1.0 + (c1 / h0) * oax +
                      (c1 / (alpha * h0)) * oax * oax * m_x1;
    const double r0_identity = 2.0 * c1 * c.h0_const / h0;
    if (std::abs(r0 - r0_identity) > 1e-10 * std::max(1.0, std::abs(r0)))
        throw numerical_error("laplace_s2: R0 closed form and 2 c1 H0 / h0 disagree");

    LaplaceResult r;
    r.h0_curvature = c.h0_const;
    r.r0 = r0;
    r.z_pn_h0_log = log_z;
    r.exponent_derivative_at_saddle = c.fp_prime;
    r.log_value.log_mag = M_LN2 + log_z - ua.nA * st.phi.real() +
                          0.5 * (std::log(M_PI) - std::log(p * c.h0_const)) -
                          0.5 * c.gap_log_sum;
    r.log_value.phase = 0.5 * M_PI;
    return r;
}

// ---------------------------------------------------------------------------
// Log density ratios
// ---------------------------------------------------------------------------

enum class DensityMethod { Quadrature, Laplace };

// log k_p(h): the h-dependent prefactor of the joint eigenvalue density.
inline double log_prefactor(double h, const ModelDims& dims, Setting setting) {
    if (!(h > 0.0)) throw argument_error("log_prefactor: h must be positive");
    const double p = dims.p, na = dims.n_a();
    if (setting == Setting::CovarianceSpike)
        return 0.5 * (p - 2.0 - na) * std::log1p(h) + (1.0 - 0.5 * p) * std::log(h);
    return -0.5 * na * h + (1.0 - 0.5 * p) * std::log(h);
}

// Quadrature log density ratio on a caller-supplied contour. Both integrals
// share the contour, so per-draw geometry cancels from the ratio. The
// method-selecting overload below builds the edge-floored default; pass a
// make_separating_spec contour when every draw must evaluate, as in
// likelihood-ratio averages over replications.
inline double joint_log_density_ratio(const EigenSample& sample, double h1, double h0,
                                      Setting setting, const ContourSpec& spec) {
    if (h1 == h0) return 0.0;
    const DensityInput inp = density_input_from(sample);
    const double dk = log_prefactor(h1, sample.dims, setting) -
                      log_prefactor(h0, sample.dims, setting);
    LogComplex i1, i0;
    if (setting == Setting::CovarianceSpike) {
        i1 = contour_integral_s1(inp, h1, spec).value;
        i0 = contour_integral_s1(inp, h0, spec).value;
    } else {
        i1 = contour_integral_s2(inp, h1, spec).value;
        i0 = contour_integral_s2(inp, h0, spec).value;
    }
    const double imag_residue = std::remainder(i1.phase - i0.phase, 2.0 * M_PI);
    if (std::abs(imag_residue) > 1e-8)
        throw numerical_error("joint_log_density_ratio: ratio is not real");
    return dk + (i1.log_mag - i0.log_mag);
}

inline double joint_log_density_ratio(const EigenSample& sample, double h1, double h0,
                                      Setting setting, DensityMethod method) {
    if (h1 == h0) return 0.0;
    const DensityInput inp = density_input_from(sample);
    const double dk = log_prefactor(h1, sample.dims, setting) -
                      log_prefactor(h0, sample.dims, setting);

    LogComplex i1, i0;
    if (method == DensityMethod::Quadrature) {
        const ContourKind kind = setting == Setting::CovarianceSpike
                                     ? ContourKind::SettingOneK
                                     : ContourKind::SettingTwoC;
        return joint_log_density_ratio(sample, h1, h0, setting,
                                       make_contour_spec(inp, kind));
    } else {
        if (setting == Setting::CovarianceSpike) {
            i1 = laplace_s1(inp, h1).log_value;
            i0 = laplace_s1(inp, h0).log_value;
        } else {
            i1 = laplace_s2(inp, h1).log_value;
            i0 = laplace_s2(inp, h0).log_value;
        }
    }
    const double imag_residue = std::remainder(i1.phase - i0.phase, 2.0 * M_PI);
    if (std::abs(imag_residue) > 1e-8)
        throw numerical_error("joint_log_density_ratio: ratio is not real");
    return dk + (i1.log_mag - i0.log_mag);
}

} // namespace fratio
