#pragma once
// Local-asymptotic-normality layer: local reparameterizations of the spike,
// the asymptotically sufficient statistic built from the largest eigenvalue,
// closed-form log likelihood ratio approximations for both spiked settings,
// and efficient tests / confidence intervals.
//
// Convention shared with the density module: centerings use the finite-p
// aspect ratios (p/n1, p/n2) while the scalings omega and the curvatures
// tau^2 use the same ratios as their limit values; the eigenvalue transform
// is lambda_tilde = alpha_p*lambda/(1 + alpha_p*lambda) with alpha_p = nA/n2.

#include <fratio/analytics.hpp>
#include <fratio/density.hpp>
#include <fratio/errors.hpp>
#include <fratio/stats.hpp>
#include <fratio/types.hpp>

#include <cmath>
#include <optional>

namespace fratio {

// ---------------------------------------------------------------------------
// Local reparameterization
// ---------------------------------------------------------------------------

// Scaling that turns the sqrt(p)-local spike deviation gamma into the
// normalized parameter theta = gamma/omega of the limiting Gaussian shift.
inline double local_scaling(double h0, double c1, double c2, Setting setting) {
    const AspectRatios a(c1, c2);
    if (!(h0 > a.h_bar))
        throw domain_error("local_scaling: null spike at or below the phase transition");
    const double den = h0 - c2 * (1.0 + h0);
    const double den2 = den * den;
    if (setting == Setting::CovarianceSpike)
        return 2.0 * h0 * h0 * (1.0 + h0) * (1.0 + h0) * (a.r * a.r) / den2;
    const double poly =
        c1 + c2 + c2 * h0 * h0 + c1 * c1 + 2.0 * c1 * h0 + 2.0 * c2 * h0;
    return 2.0 * h0 * h0 * poly / den2;
}

struct LocalParam {
    double h0;       // null spike
    double gamma;    // sqrt(p)-local deviation: h_p = h0 + gamma/sqrt(p)
    double theta;    // normalized local parameter, theta = gamma/omega exactly
    double omega;    // scaling of the limiting shift experiment
    Setting setting;
};

inline LocalParam make_local_param(double h0, double gamma, double c1, double c2,
                                   Setting setting) {
    const double omega = local_scaling(h0, c1, c2, setting);
    return {h0, gamma, gamma / omega, omega, setting};
}

// ---------------------------------------------------------------------------
// The LAN statistic
// ---------------------------------------------------------------------------

struct LanStatistic {
    double delta;    // sqrt(p) * (lambda_1 - x_p1), finite-p centering
    double tau_sq;   // limiting variance of delta (setting-specific)
    double log_lr_lan;  // theta*delta - theta^2*tau_sq/2, exactly
    std::optional<double> log_lr_exact;  // filled by quadrature-based callers
};

inline LanStatistic lan_statistic(double lambda1, double h0, const ModelDims& dims,
                                  Setting setting, double theta) {
    const AspectRatios a(dims.c1p(), dims.c2p());
    if (!(h0 > a.h_bar))
        throw domain_error("lan_statistic: null spike at or below the phase transition");
    const double xp1 = spike_centering(h0, dims);
    const double delta = std::sqrt(static_cast<double>(dims.p)) * (lambda1 - xp1);
    const double tau_sq = asymptotic_variance(h0, dims.c1p(), dims.c2p(), setting);
    const double log_lr = theta * delta - 0.5 * theta * theta * tau_sq;
    return {delta, tau_sq, log_lr, std::nullopt};
}

inline LanStatistic lan_statistic(double lambda1, const LocalParam& lp,
                                  const ModelDims& dims) {
    return lan_statistic(lambda1, lp.h0, dims, lp.setting, lp.theta);
}

// ---------------------------------------------------------------------------
// Closed-form log likelihood ratios
// ---------------------------------------------------------------------------

// Setting 1: log of the prefactor-times-endpoint form of the density ratio.
inline double loglr_closed_s1(double gamma, double lambda1, double h0,
                              const ModelDims& dims) {
    const int p = dims.p;
    const int n = dims.n_total();
    const double hp = h0 + gamma / std::sqrt(static_cast<double>(p));
    const AspectRatios a(dims.c1p(), dims.c2p());
    if (!(h0 > a.h_bar) || !(hp > a.h_bar))
        throw domain_error("loglr_closed_s1: spike at or below the phase transition");
    const double lt = to_lambda_tilde(lambda1, dims.alpha_p());
    const double q0 = lt * h0 / (1.0 + h0);
    const double qp = lt * hp / (1.0 + hp);
    if (!(q0 < 1.0) || !(qp < 1.0))
        throw domain_error("loglr_closed_s1: transformed eigenvalue outside the kernel domain");
    const double t1 = 0.5 * (n + 2 - p) * (std::log1p(-q0) - std::log1p(-qp));
    const double t2 = -0.5 * (p - 2) * std::log(hp / h0);
    const double t3 = 0.5 * (p - dims.n1 - 2) * std::log((1.0 + hp) / (1.0 + h0));
    return t1 + t2 + t3;
}

// Shared building blocks of the Setting 2 closed form. All four pieces are
// functions of the same root z_plus of z^2 + (v - zeta) z - u zeta at
// zeta = h*lambda_tilde/2; s is the discriminant square root.
struct AFunctions {
    double a1;
    double a2;  // -z_plus
    double a3;  // -u log z_plus
    double a4;  // (u - v) log(z_plus - zeta)
    double s;
};

inline AFunctions a_functions(double h, double lambda_tilde1, double u, double v) {
    if (!(h > 0.0)) throw argument_error("a_functions: h must be positive");
    if (!(lambda_tilde1 > 0.0 && lambda_tilde1 < 1.0))
        throw argument_error("a_functions: lambda_tilde must lie in (0,1)");
    if (!(u > v && v > 0.0))
        throw argument_error("a_functions: need u > v > 0 (p < nA and n2 > 0)");
    const double zeta = 0.5 * h * lambda_tilde1;
    const double d = zeta - v;
    const double s = std::sqrt(d * d + 4.0 * u * zeta);  // >= |zeta - v|, no sign risk
    const double z_plus = 0.5 * (d + s);
    const double z_minus_zeta = 0.5 * (s - zeta - v);  // z_plus - zeta > 0 always
    if (!(z_plus > 0.0) || !(z_minus_zeta > 0.0))
        throw numerical_error("a_functions: root ordering violated");
    AFunctions out;
    out.a1 = 0.5 * (h + std::log(h));
    out.a2 = -z_plus;
    out.a3 = -u * std::log(z_plus);
    out.a4 = (u - v) * std::log(z_minus_zeta);
    out.s = s;
    return out;
}

// Setting 2: -nA * sum_j [a_j(h_p) - a_j(h0)] at the observed lambda_tilde_1,
// with the finite-p u, v.
inline double loglr_closed_s2(double gamma, double lambda1, double h0,
                              const ModelDims& dims) {
    const int p = dims.p;
    const int na = dims.n_a();
    const double hp = h0 + gamma / std::sqrt(static_cast<double>(p));
    const AspectRatios a(dims.c1p(), dims.c2p());
    if (!(h0 > a.h_bar) || !(hp > a.h_bar))
        throw domain_error("loglr_closed_s2: spike at or below the phase transition");
    const double u = 0.5 * (na + dims.n2 - p) / na;
    const double v = 0.5 * (na - p) / na;
    const double lt = to_lambda_tilde(lambda1, dims.alpha_p());
    const AFunctions f0 = a_functions(h0, lt, u, v);
    const AFunctions fp = a_functions(hp, lt, u, v);
    return -static_cast<double>(na) *
           ((fp.a1 - f0.a1) + (fp.a2 - f0.a2) + (fp.a3 - f0.a3) + (fp.a4 - f0.a4));
}

// Exact (quadrature or endpoint-expansion) log likelihood ratio between the
// local alternative h0 + gamma/sqrt(p) and the null h0.
inline double local_log_lr_exact(const EigenSample& sample, const LocalParam& lp,
                                 DensityMethod method) {
    const double hp = lp.h0 + lp.gamma / std::sqrt(static_cast<double>(sample.dims.p));
    return joint_log_density_ratio(sample, hp, lp.h0, lp.setting, method);
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

struct TestResult {
    double z;             // delta / tau
    double p_one_sided;   // against the upper-tail alternative h > h0
    double p_two_sided;
    bool reject_one_sided;
    bool reject_two_sided;
    double alpha;
};

// Efficient test of H0: h = h0 from the largest eigenvalue. In the limiting
// Gaussian shift experiment z = delta/tau is standard normal under the null,
// so normal quantiles are the right critical values.
inline TestResult efficient_test(const EigenSample& sample, double h0, Setting setting,
                                 double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw argument_error("efficient_test: alpha must lie strictly inside (0,1)");
    if (sample.values.empty()) throw argument_error("efficient_test: empty spectrum");
    const LanStatistic st = lan_statistic(sample.values[0], h0, sample.dims, setting, 0.0);
    const double z = st.delta / std::sqrt(st.tau_sq);
    TestResult out;
    out.z = z;
    out.p_one_sided = 1.0 - normal_cdf(z);
    out.p_two_sided = 2.0 * (1.0 - normal_cdf(std::abs(z)));
    out.reject_one_sided = out.p_one_sided < alpha;
    out.reject_two_sided = out.p_two_sided < alpha;
    out.alpha = alpha;
    return out;
}

struct SpikeInterval {
    double h_hat;   // monotone inversion of the finite-p centering map
    double h_low;
    double h_high;
    double level;
};

// Point estimate by inverting lambda_1 = x_p(h) (monotone above threshold),
// interval by the delta method: sd(h_hat) ~ tau(h_hat)/(sqrt(p)*x_p'(h_hat)).
inline SpikeInterval spike_confidence_interval(const EigenSample& sample, Setting setting,
                                               double level) {
    if (!(level > 0.0 && level < 1.0))
        throw argument_error("spike_confidence_interval: level must lie inside (0,1)");
    if (sample.values.empty())
        throw argument_error("spike_confidence_interval: empty spectrum");
    const ModelDims& dims = sample.dims;
    const double lambda1 = sample.values[0];
    const AspectRatios a(dims.c1p(), dims.c2p());
    double lo = a.h_bar + 1e-6, hi = 1e3;
    if (!(spike_centering(lo, dims) < lambda1))
        throw domain_error("spike_confidence_interval: sub-critical observation");
    if (!(spike_centering(hi, dims) > lambda1))
        throw domain_error("spike_confidence_interval: observation beyond the inversion bracket");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (spike_centering(mid, dims) < lambda1 ? lo : hi) = mid;
        if (hi - lo < 1e-13 * hi) break;
    }
    const double h_hat = 0.5 * (lo + hi);
    const double tau = std::sqrt(asymptotic_variance(h_hat, dims.c1p(), dims.c2p(), setting));
    const double slope = spike_centering_derivative(h_hat, dims);
    const double sd = tau / (std::sqrt(static_cast<double>(dims.p)) * slope);
    const double zq = normal_quantile(0.5 * (1.0 + level));
    return {h_hat, h_hat - zq * sd, h_hat + zq * sd, level};
}

} // namespace fratio
