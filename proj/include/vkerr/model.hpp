#pragma once

#include <complex>

#include <Eigen/Dense>

#include "vkerr/params.hpp"

namespace vkerr {

using cd = std::complex<double>;
using Vec4c = Eigen::Matrix<cd, 4, 1>;
using ComplexMatrix4 = Eigen::Matrix4cd;

inline constexpr cd I_unit{0.0, 1.0};

// Phase-space point (alpha1, alpha1+, alpha2, alpha2+) on the classical manifold.
inline Vec4c phase_point(cd a1, cd a2) {
    Vec4c a;
    a << a1, std::conj(a1), a2, std::conj(a2);
    return a;
}

// Normalized Fokker-Planck drift with alpha and alpha+ treated independently.
inline Vec4c drift(const Vec4c& a, const ModelParams& m) {
    const cd x1 = a(0), y1 = a(1), x2 = a(2), y2 = a(3);
    const cd ie = I_unit * double(m.eta);
    const cd lp = 1.0 + ie * m.delta;
    const cd lm = 1.0 - ie * m.delta;
    const double A = m.A_mt, hB = 0.5 * m.B_mt;
    Vec4c r;
    r(0) = m.E - lp * x1 + ie * (x1 * x1 * y1 + A * x1 * x2 * y2 + hB * y1 * x2 * x2);
    r(1) = m.E - lm * y1 - ie * (x1 * y1 * y1 + A * y1 * x2 * y2 + hB * x1 * y2 * y2);
    r(2) = -lp * x2 + ie * (x2 * x2 * y2 + A * x1 * x2 * y1 + hB * x1 * x1 * y2);
    r(3) = -lm * y2 - ie * (x2 * y2 * y2 + A * x1 * y2 * y1 + hB * y1 * y1 * x2);
    return r;
}

inline ComplexMatrix4 drift_jacobian(const Vec4c& a, const ModelParams& m) {
    const cd x1 = a(0), y1 = a(1), x2 = a(2), y2 = a(3);
    const cd ie = I_unit * double(m.eta);
    const cd lp = 1.0 + ie * m.delta;
    const cd lm = 1.0 - ie * m.delta;
    const double A = m.A_mt, B = m.B_mt, hB = 0.5 * m.B_mt;
    ComplexMatrix4 J;
    J(0, 0) = -lp + ie * (2.0 * x1 * y1 + A * x2 * y2);
    J(0, 1) = ie * (x1 * x1 + hB * x2 * x2);
    J(0, 2) = ie * (A * x1 * y2 + B * y1 * x2);
    J(0, 3) = ie * A * x1 * x2;

    J(1, 0) = -ie * (y1 * y1 + hB * y2 * y2);
    J(1, 1) = -lm - ie * (2.0 * x1 * y1 + A * x2 * y2);
    J(1, 2) = -ie * A * y1 * y2;
    J(1, 3) = -ie * (A * y1 * x2 + B * x1 * y2);

    J(2, 0) = ie * (A * x2 * y1 + B * x1 * y2);
    J(2, 1) = ie * A * x1 * x2;
    J(2, 2) = -lp + ie * (2.0 * x2 * y2 + A * x1 * y1);
    J(2, 3) = ie * (x2 * x2 + hB * x1 * x1);

    J(3, 0) = -ie * A * y1 * y2;
    J(3, 1) = -ie * (A * x1 * y2 + B * y1 * x2);
    J(3, 2) = -ie * (y2 * y2 + hB * y1 * y1);
    J(3, 3) = -lm - ie * (2.0 * x2 * y2 + A * x1 * y1);
    return J;
}

// Only the two complex-symmetric blocks {0,2} and {1,3} are populated.
inline ComplexMatrix4 diffusion(const Vec4c& a, const ModelParams& m) {
    const cd x1 = a(0), y1 = a(1), x2 = a(2), y2 = a(3);
    const cd ie = I_unit * double(m.eta);
    const double A = m.A_mt, hB = 0.5 * m.B_mt;
    ComplexMatrix4 D = ComplexMatrix4::Zero();
    D(0, 0) = ie * (x1 * x1 + hB * x2 * x2);
    D(1, 1) = -ie * (y1 * y1 + hB * y2 * y2);
    D(2, 2) = ie * (x2 * x2 + hB * x1 * x1);
    D(3, 3) = -ie * (y2 * y2 + hB * y1 * y1);
    D(0, 2) = D(2, 0) = -ie * A * x1 * x2;
    D(1, 3) = D(3, 1) = ie * A * y1 * y2;
    return D;
}

// Largest component of the classical steady-state residual.
inline double classical_residual(cd a1, cd a2, const ModelParams& m) {
    Vec4c r = drift(phase_point(a1, a2), m);
    return std::max(std::abs(r(0)), std::abs(r(2)));
}

}  // namespace vkerr
