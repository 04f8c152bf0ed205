#pragma once

#include <stdexcept>
#include <string>

namespace fratio {

// Base class for everything thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid dimensions, aspect ratios, or experiment configuration.
struct config_error : error {
    using error::error;
};

// Input outside the mathematical domain of a formula (e.g. sub-critical
// spike passed to a separated-eigenvalue limit).
struct domain_error : error {
    using error::error;
};

// Input outside the declared accuracy range of an algorithm (caller must
// switch to another evaluation path).
struct range_error : error {
    using error::error;
};

// Iterative solver failed to converge, or a decomposition broke down.
struct numerical_error : error {
    using error::error;
};

// Bad function argument (empty vector, non-registered name, ...).
struct argument_error : error {
    using error::error;
};

// Integration contour touches or crosses a singularity of the integrand.
struct geometry_error : error {
    using error::error;
};

// Branch bookkeeping of a multivalued function detected a discontinuity.
struct branch_error : error {
    using error::error;
};

// Spectral gap too small for a saddle-point approximation.
struct separation_error : error {
    using error::error;
};

// Evaluation requested exactly at a branch point or pole.
struct singularity_error : error {
    using error::error;
};

} // namespace fratio
