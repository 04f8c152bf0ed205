#pragma once

// Log-scale complex arithmetic.  Quantities such as joint densities and
// hypergeometric values overflow double precision long before the ratios
// of interest do, so they are carried as (log magnitude, phase) pairs and
// summed with a rescaled accumulator.

#include <cmath>
#include <complex>
#include <limits>

namespace fratio {

struct LogComplex {
    double log_mag;  // natural log of |z|; -inf encodes z == 0
    double phase;    // arg(z), radians

    static LogComplex zero() {
        return {-std::numeric_limits<double>::infinity(), 0.0};
    }

    static LogComplex from(std::complex<double> z) {
        if (z == std::complex<double>(0.0, 0.0)) return zero();
        return {std::log(std::abs(z)), std::arg(z)};
    }

    static LogComplex from_real(double x) {
        if (x == 0.0) return zero();
        return {std::log(std::abs(x)), x > 0.0 ? 0.0 : M_PI};
    }

    std::complex<double> value() const {
        if (std::isinf(log_mag) && log_mag < 0.0) return {0.0, 0.0};
        return std::polar(std::exp(log_mag), phase);
    }

    bool is_zero() const { return std::isinf(log_mag) && log_mag < 0.0; }

    LogComplex operator*(const LogComplex& o) const {
        if (is_zero() || o.is_zero()) return zero();
        return {log_mag + o.log_mag, phase + o.phase};
    }

    LogComplex operator/(const LogComplex& o) const {
        return {log_mag - o.log_mag, phase - o.phase};
    }
};

// Streaming sum of complex terms supplied in log scale.  Keeps a running
// reference exponent and a double-precision residual sum relative to it;
// the reference is raised whenever a dominant term arrives.
class LogSum {
public:
    LogSum() : ref_(-std::numeric_limits<double>::infinity()), acc_(0.0, 0.0) {}

    void add(const LogComplex& t) {
        if (t.is_zero()) return;
        if (t.log_mag <= ref_) {
            acc_ += std::polar(std::exp(t.log_mag - ref_), t.phase);
            return;
        }
        // New dominant scale: rescale the accumulated residual.
        if (std::isfinite(ref_)) acc_ *= std::exp(ref_ - t.log_mag);
        ref_ = t.log_mag;
        acc_ += std::polar(1.0, t.phase);
    }

    void add(std::complex<double> weight, const LogComplex& t) {
        if (weight == std::complex<double>(0.0, 0.0)) return;
        LogComplex w = LogComplex::from(weight);
        add(w * t);
    }

    // Result in log scale.  A cancelled (exactly zero) sum maps to log_mag
    // = -inf, mirroring LogComplex::zero().
    LogComplex result() const {
        if (!std::isfinite(ref_)) return LogComplex::zero();
        if (acc_ == std::complex<double>(0.0, 0.0)) return LogComplex::zero();
        return {ref_ + std::log(std::abs(acc_)), std::arg(acc_)};
    }

private:
    double ref_;
    std::complex<double> acc_;
};

} // namespace fratio
