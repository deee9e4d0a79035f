#pragma once

#include <stdexcept>
#include <string>

namespace vkerr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParameter : Error {
    using Error::Error;
};

// Raised when a bifurcation needs a coefficient that is zero (e.g. B = 0 for
// the polarization switch-on).
struct NoThreshold : Error {
    using Error::Error;
};

struct NonConvergence : Error {
    using Error::Error;
};

struct InternalInconsistency : Error {
    using Error::Error;
};

struct NumericalConsistency : Error {
    using Error::Error;
};

// A closed form was asked for exactly at its singular point; approach it instead.
struct LimitRequired : Error {
    using Error::Error;
};

struct NearSingular : Error {
    NearSingular(const std::string& what, double omega_, double delta_, double E2_)
        : Error(what), omega(omega_), delta(delta_), E2(E2_) {}
    double omega;
    double delta;
    double E2;
};

struct UnstableState : Error {
    using Error::Error;
};

struct DegenerateBlock : Error {
    using Error::Error;
};

struct Divergence : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

}  // namespace vkerr
