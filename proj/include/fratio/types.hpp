#pragma once

// Domain types shared across the library: problem dimensions, spike
// configuration, and sampled spectra.

#include <cstdint>
#include <string>
#include <vector>

#include "fratio/errors.hpp"

namespace fratio {

// Which of the two spiked models generated the data.
enum class Setting {
    CovarianceSpike = 1,     // spikes in the covariance of the numerator data
    NoncentralitySpike = 2,  // spikes in the non-centrality of the numerator Wishart
};

inline Setting setting_from_int(int s) {
    if (s == 1) return Setting::CovarianceSpike;
    if (s == 2) return Setting::NoncentralitySpike;
    throw config_error("setting must be 1 or 2");
}

inline int setting_to_int(Setting s) { return s == Setting::CovarianceSpike ? 1 : 2; }

struct ModelDims {
    int p;   // dimension
    int n1;  // numerator degrees of freedom
    int n2;  // denominator degrees of freedom
    int k;   // number of spikes

    void validate() const {
        if (p <= 0 || n1 <= 0 || n2 <= 0 || k < 0)
            throw config_error("ModelDims: p, n1, n2 must be positive and k >= 0");
        if (p >= n1 || p >= n2)
            throw config_error("ModelDims: require p < n1 and p < n2");
    }

    int n_a() const { return n1 + k; }
    int n_total() const { return n_a() + n2; }
    double c1p() const { return static_cast<double>(p) / n1; }
    double c2p() const { return static_cast<double>(p) / n2; }
    double alpha_p() const { return static_cast<double>(n_a()) / n2; }
};

struct SpikeSpec {
    Setting setting;
    std::vector<double> h;  // strictly descending, all positive

    void validate() const {
        for (std::size_t i = 0; i < h.size(); ++i) {
            if (!(h[i] > 0.0)) throw config_error("SpikeSpec: spikes must be positive");
            if (i > 0 && !(h[i] < h[i - 1]))
                throw config_error("SpikeSpec: spikes must be strictly descending");
        }
    }

    int k() const { return static_cast<int>(h.size()); }
};

struct EigenSample {
    std::vector<double> values;  // descending eigenvalues of the F ratio
    ModelDims dims;
    SpikeSpec spikes;
    std::uint64_t seed;
    int replication_index;
};

} // namespace fratio
