#pragma once

#include <stdexcept>
#include <string>

namespace orbitforge {

// Invalid caller input (degenerate curves, bad parameters, malformed config).
class InvalidInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A point or leaf fell outside Dom(F).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// iterate_until_covers exhausted max_iters without covering any band.
class GrowthFailureError : public std::runtime_error {
public:
    GrowthFailureError(const std::string& what, int iters, double last_width)
        : std::runtime_error(what), iterations(iters), final_width(last_width) {}
    int iterations;
    double final_width;
};

// Geometry construction failed (e.g. a non-transversal cross-section).
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The sampled return map is not triangular at the requested tolerance.
class NotTriangularError : public std::runtime_error {
public:
    NotTriangularError(const std::string& what, double dev)
        : std::runtime_error(what), max_y_deviation(dev) {}
    double max_y_deviation;
};

// The bisection bracket for a periodic leaf was invalid; the witness branch
// needs refinement.
class BranchRefinementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Adaptive step size underflowed before reaching the target time.
class IntegrationStallError : public std::runtime_error {
public:
    IntegrationStallError(const std::string& what, double t_reached)
        : std::runtime_error(what), time_reached(t_reached) {}
    double time_reached;
};

}  // namespace orbitforge
