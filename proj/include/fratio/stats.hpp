#pragma once

// Small statistics toolbox: normal distribution functions, streaming
// moments, and Kolmogorov-Smirnov distances used by the verification
// experiments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fratio/errors.hpp"

namespace fratio {

// Standard normal CDF via the complementary error function.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// Standard normal quantile: Acklam's rational approximation polished by a
// single Halley step on Phi(x) - p = 0 (relative error below 1e-14).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw argument_error("normal_quantile: p must lie in (0,1)");

    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};

    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley iteration.
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

// Welford streaming moments; variance() is the unbiased sample variance.
class RunningMoments {
public:
    RunningMoments() : n_(0), mean_(0.0), m2_(0.0) {}

    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    std::size_t count() const { return n_; }
    double mean() const {
        if (n_ == 0) throw argument_error("RunningMoments: empty");
        return mean_;
    }
    double variance() const {
        if (n_ < 2) throw argument_error("RunningMoments: need two samples");
        return m2_ / static_cast<double>(n_ - 1);
    }
    double stddev() const { return std::sqrt(variance()); }

private:
    std::size_t n_;
    double mean_;
    double m2_;
};

enum class ReferenceDistribution { StdNormal };

// One-sample Kolmogorov-Smirnov distance sup_x |F_n(x) - F(x)|.
inline double ks_distance(std::vector<double> samples,
                          ReferenceDistribution dist = ReferenceDistribution::StdNormal) {
    if (samples.empty()) throw argument_error("ks_distance: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double f = 0.0;
        switch (dist) {
        case ReferenceDistribution::StdNormal:
            f = normal_cdf(samples[i]);
            break;
        }
        const double hi = (static_cast<double>(i) + 1.0) / n - f;
        const double lo = f - static_cast<double>(i) / n;
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|; ties are
// consumed together so the supremum is only evaluated at actual data points.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw argument_error("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na -
                                 static_cast<double>(j) / nb));
    }
    return d;
}

} // namespace fratio
