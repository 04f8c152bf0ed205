#pragma once

// Counter-based pseudo-random generation (Philox4x32-10) plus the variate
// transforms used by the samplers.  A counter generator is used so that
// replication r, substream s, draw index n maps to the same bits regardless
// of evaluation order or threading; runs are reproducible from (seed, rep).

#include <cmath>
#include <cstdint>
#include <limits>

#include "fratio/errors.hpp"

namespace fratio {

namespace detail {

inline void philox_round(std::uint32_t ctr[4], const std::uint32_t key[2]) {
    constexpr std::uint32_t M0 = 0xD2511F53u;
    constexpr std::uint32_t M1 = 0xCD9E8D57u;
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t c1 = ctr[1], c3 = ctr[3];
    ctr[0] = hi1 ^ c1 ^ key[0];
    ctr[1] = lo1;
    ctr[2] = hi0 ^ c3 ^ key[1];
    ctr[3] = lo0;
}

} // namespace detail

// Philox4x32-10 block function: 4 words of counter, 2 words of key,
// 10 rounds with Weyl key schedule.
inline void philox4x32(const std::uint32_t counter[4], const std::uint32_t key[2],
                       std::uint32_t out[4]) {
    constexpr std::uint32_t W0 = 0x9E3779B9u; // golden-ratio Weyl constant
    constexpr std::uint32_t W1 = 0xBB67AE85u; // sqrt(3)-1 Weyl constant
    std::uint32_t k[2] = {key[0], key[1]};
    for (int i = 0; i < 4; ++i) out[i] = counter[i];
    for (int round = 0; round < 10; ++round) {
        detail::philox_round(out, k);
        k[0] += W0;
        k[1] += W1;
    }
}

// One independent random stream, addressed by (seed, rep, substream).
// Blocks are consumed sequentially; each block yields four 32-bit words.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint32_t rep, std::uint32_t substream)
        : block_(0), pos_(4), have_cached_normal_(false), cached_normal_(0.0) {
        key_[0] = static_cast<std::uint32_t>(seed);
        key_[1] = static_cast<std::uint32_t>(seed >> 32);
        rep_ = rep;
        substream_ = substream;
    }

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on the open interval (0,1); never returns 0 or 1.
    double uniform() {
        return (static_cast<double>(next_u32()) + 0.5) * 0x1p-32;
    }

    // Uniform on (-1,1).
    double uniform_sym() { return 2.0 * uniform() - 1.0; }

    // Standard normal via the Marsaglia polar method (pairs cached).
    double normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        double u, v, s;
        do {
            u = uniform_sym();
            v = uniform_sym();
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_normal_ = v * f;
        have_cached_normal_ = true;
        return u * f;
    }

    // Gamma(shape alpha, scale 1), Marsaglia-Tsang squeeze method.
    double gamma(double alpha) {
        if (!(alpha > 0.0)) throw argument_error("gamma: shape must be positive");
        if (alpha < 1.0) {
            const double g = gamma(alpha + 1.0);
            const double u = uniform();
            return g * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Chi-square with df degrees of freedom (df need not be integral).
    double chisq(double df) { return 2.0 * gamma(0.5 * df); }

private:
    void refill() {
        const std::uint32_t ctr[4] = {
            static_cast<std::uint32_t>(block_),
            static_cast<std::uint32_t>(block_ >> 32),
            rep_,
            substream_,
        };
        philox4x32(ctr, key_, buf_);
        ++block_;
        pos_ = 0;
    }

    std::uint32_t key_[2];
    std::uint32_t rep_;
    std::uint32_t substream_;
    std::uint64_t block_;
    std::uint32_t buf_[4];
    int pos_;
    bool have_cached_normal_;
    double cached_normal_;
};

} // namespace fratio
