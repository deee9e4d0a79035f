#pragma once

#include <cmath>

#include "vkerr/errors.hpp"

namespace vkerr {

inline constexpr double liquid_A = 0.25;
inline constexpr double liquid_B = 1.5;

struct PhysicalParams {
    double gamma = 1.0;
    double g = 1.0;
    double omega_c = 0.0;
    double omega_0 = 0.0;
    double E0 = 0.0;
    int eta = 1;
    double A_mt = liquid_A;
    double B_mt = liquid_B;
    bool isotropic = false;

    void validate() const {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidParameter("gamma must be positive");
        if (!(g > 0.0) || !std::isfinite(g)) throw InvalidParameter("g must be positive");
        if (eta != 1 && eta != -1) throw InvalidParameter("eta must be +1 or -1");
        if (!(E0 >= 0.0)) throw InvalidParameter("E0 must be non-negative");
        if (!std::isfinite(omega_c) || !std::isfinite(omega_0) || !std::isfinite(A_mt) || !std::isfinite(B_mt))
            throw InvalidParameter("non-finite physical parameter");
        if (isotropic && std::abs(A_mt + 0.5 * B_mt - 1.0) > 1e-12)
            throw InvalidParameter("isotropic medium requires A + B/2 = 1");
    }

    // Kerr-shifted cavity resonance.
    double shifted_cavity_frequency() const { return omega_c - eta * g * (1.0 + 0.5 * A_mt); }
};

// Normalized units: time in 1/gamma, intensities in gamma/g.
struct ModelParams {
    double delta = 0.0;
    int eta = 1;
    double A_mt = liquid_A;
    double B_mt = liquid_B;
    double E = 0.0;

    static ModelParams liquid(double delta, double E2 = 0.0, int eta = 1) {
        ModelParams m;
        m.delta = delta;
        m.eta = eta;
        m.E = std::sqrt(E2);
        m.validate();
        return m;
    }

    double E2() const { return E * E; }

    ModelParams at_pump(double E2) const {
        if (!(E2 >= 0.0)) throw InvalidParameter("pump E^2 must be non-negative");
        ModelParams m = *this;
        m.E = std::sqrt(E2);
        return m;
    }

    // Signed detuning that multiplies i in the mean-field equations.
    double cavity_detuning() const { return eta * delta; }

    void validate() const {
        if (eta != 1 && eta != -1) throw InvalidParameter("eta must be +1 or -1");
        if (!(E >= 0.0) || !std::isfinite(E)) throw InvalidParameter("E must be finite and non-negative");
        if (!std::isfinite(delta) || !std::isfinite(A_mt) || !std::isfinite(B_mt))
            throw InvalidParameter("non-finite model parameter");
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline ModelParams normalize(const PhysicalParams& p) {
    p.validate();
    ModelParams m;
    m.eta = p.eta;
    m.A_mt = p.A_mt;
    m.B_mt = p.B_mt;
    m.delta = (p.shifted_cavity_frequency() - p.omega_0) / (p.eta * p.gamma);
    m.E = p.E0 * std::sqrt(p.g / (p.gamma * p.gamma * p.gamma));
    return m;
}

// Pump frequency is placed at zero; only the detuning is physical.
inline PhysicalParams denormalize(const ModelParams& m, double gamma, double g) {
    if (!(gamma > 0.0) || !(g > 0.0)) throw InvalidParameter("gamma and g must be positive");
    m.validate();
    PhysicalParams p;
    p.gamma = gamma;
    p.g = g;
    p.eta = m.eta;
    p.A_mt = m.A_mt;
    p.B_mt = m.B_mt;
    p.omega_0 = 0.0;
    p.omega_c = m.eta * gamma * m.delta + m.eta * g * (1.0 + 0.5 * m.A_mt);
    p.E0 = m.E * std::sqrt(gamma * gamma * gamma / g);
    return p;
}

// a -> a*, eta -> -eta leaves the mean-field equations invariant when delta is
// measured in units of eta*gamma, so delta itself stays put while the physical
// detuning eta*delta changes sign.
inline ModelParams mirror(const ModelParams& m) {
    ModelParams r = m;
    r.eta = -m.eta;
    return r;
}

}  // namespace vkerr
