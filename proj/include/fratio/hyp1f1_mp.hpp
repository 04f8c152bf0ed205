#pragma once

// 50-digit Kummer-series oracle for real positive parameters, used only by
// tests and the verification suite to calibrate the uniform asymptotic.
// Kept out of special.hpp so the multiprecision dependency does not leak
// into ordinary translation units.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "fratio/errors.hpp"

namespace fratio {

// log 1F1(a, b; z) for real a, b, z > 0, summed at 50 decimal digits.
inline double hyp1f1_log_mp(double a, double b, double z) {
    if (!(a > 0.0 && b > 0.0 && z > 0.0))
        throw argument_error("hyp1f1_log_mp: requires positive real parameters");
    using mp = boost::multiprecision::cpp_bin_float_50;
    const mp am(a), bm(b), zm(z);
    mp sum(1), term(1);
    for (int n = 0; n < 200000; ++n) {
        term *= (am + n) / ((bm + n) * (n + 1)) * zm;
        sum += term;
        if (term < sum * 1e-45 && n > 4)
            return boost::multiprecision::log(sum).convert_to<double>();
    }
    throw numerical_error("hyp1f1_log_mp: no convergence");
}

} // namespace fratio
