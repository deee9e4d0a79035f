#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "vkerr/errors.hpp"
#include "vkerr/linfluct.hpp"
#include "vkerr/steady.hpp"

namespace vkerr {

struct QuadratureSpec {
    int mode = 1;  // 1 parallel, 2 orthogonal
    double beta = 0.0;

    QuadratureSpec() = default;
    QuadratureSpec(int mode_, double beta_) : mode(mode_), beta(wrap_angle(beta_)) {
        if (mode != 1 && mode != 2) throw InvalidParameter("quadrature mode must be 1 or 2");
    }
};

struct SpectrumRecord {
    double omega = 0.0;
    double normal_ordered = 0.0;
    double symmetric = 1.0;
    QuadratureSpec spec;
};

// Cross spectra are complex at nonzero frequency; only symmetric
// combinations of the two orderings are real.
struct CrossSpectrumRecord {
    double omega = 0.0;
    cd normal_ordered{};
    QuadratureSpec spec1;
    QuadratureSpec spec2;
};

enum class CrossOrder { c12, c21 };

// Vector v with v^T M v picking the quadrature of mode j at angle beta.
inline Vec4c quadrature_vector(int mode, double beta) {
    if (mode != 1 && mode != 2) throw InvalidParameter("quadrature mode must be 1 or 2");
    Vec4c v = Vec4c::Zero();
    const int i = mode == 1 ? 0 : 2;
    v(i) = std::polar(1.0, -beta);
    v(i + 1) = std::polar(1.0, beta);
    return v;
}

namespace detail {

inline double checked_real(cd z, const char* what) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw NumericalConsistency(std::string(what) + ": non-finite value");
    if (std::abs(z.imag()) > 1e-9 * std::max(1.0, std::abs(z.real())))
        throw NumericalConsistency(std::string(what) + ": imaginary residue above 1e-9");
    return z.real();
}

}  // namespace detail

inline double quad_value(const Linearization::AtFrequency& f, int mode, double beta) {
    Vec4c v = quadrature_vector(mode, beta);
    return detail::checked_real(2.0 * f.bilinear(v, v), "quadrature spectrum");
}

inline SpectrumRecord quad_spectrum(const Linearization& lin, int mode, double beta, double omega) {
    SpectrumRecord r;
    r.omega = omega;
    r.spec = QuadratureSpec(mode, beta);
    r.normal_ordered = quad_value(lin.at(omega), mode, beta);
    r.symmetric = 1.0 + r.normal_ordered;
    return r;
}

inline SpectrumRecord quad_spectrum(const SteadyState& s, const ModelParams& m, int mode, double beta,
                                    double omega) {
    return quad_spectrum(Linearization(s, m), mode, beta, omega);
}

// beta1 is always the mode-1 angle and beta2 the mode-2 angle; the order picks
// which mode's fluctuation comes first in the correlation.
inline cd cross_value(const Linearization::AtFrequency& f, CrossOrder order, double beta1, double beta2) {
    Vec4c u = quadrature_vector(1, beta1);
    Vec4c w = quadrature_vector(2, beta2);
    return order == CrossOrder::c12 ? 2.0 * f.bilinear(u, w) : 2.0 * f.bilinear(w, u);
}

inline CrossSpectrumRecord cross_spectrum(const Linearization& lin, CrossOrder order, double beta1, double beta2,
                                          double omega) {
    CrossSpectrumRecord r;
    r.omega = omega;
    r.spec1 = QuadratureSpec(1, beta1);
    r.spec2 = QuadratureSpec(2, beta2);
    r.normal_ordered = cross_value(lin.at(omega), order, beta1, beta2);
    return r;
}

inline CrossSpectrumRecord cross_spectrum(const SteadyState& s, const ModelParams& m, CrossOrder order,
                                          double beta1, double beta2, double omega) {
    return cross_spectrum(Linearization(s, m), order, beta1, beta2, omega);
}

// psi is twice the angle between the quadrature and the mode-1 field, in the
// frame where the detuning enters as eta*delta.
inline double psi_from_beta(double beta, double phi1, int eta) { return wrap_angle(2.0 * eta * (beta - phi1)); }
inline double beta_from_psi(double psi, double phi1, int eta) { return wrap_angle(phi1 + 0.5 * eta * psi); }

// Closed-form singlemode spectra (liquid coefficients).
namespace closed {

inline double Q1n(double I, double D, double psi, double w) {
    return -(3 * I * I - 4 * I * D + D * D - 1 - w * w) * std::sin(psi) + 2 * (D - 2 * I) * std::cos(psi) + 2 * I;
}
inline double Q1d(double I, double D) { return 3 * I * I - 4 * I * D + D * D + 1; }
inline double Q2(double I, double D, double psi, double w) {
    return (I * I + D * I - 2 * (D * D - 1 - w * w)) * std::sin(psi) + (4 * D - I) * std::cos(psi) + 3 * I;
}
inline double Q2d(double I, double D) { return I * I + D * I - 2 * D * D - 2; }

inline double C1(double I, double D, double w) {
    double a = Q1d(I, D) - w * w;
    return a * a + 4 * w * w;
}
inline double C2(double I, double D, double w) {
    double a = Q2d(I, D) + 2 * w * w;
    return a * a + 16 * w * w;
}

// Optimal-angle and optimal-frequency expressions as closed forms.
inline double psi_pol_opt(double D) {
    return -0.5 * std::acos((1 - D * std::sqrt(8 + 9 * D * D)) / (3 * (1 + D * D)));
}
inline double psi_up_opt(double D) { return -std::acos((2 + D * std::sqrt(D * D - 3)) / (1 + D * D)); }
inline double psi_down_opt(double D) { return -std::acos((2 - D * std::sqrt(D * D - 3)) / (1 + D * D)); }
inline double omega_opt_pol(double D) { return std::sqrt(5 - 3.5 * D * (-3 * D + std::sqrt(8 + 9 * D * D))); }
inline double omega_opt_lower(double D) { return std::sqrt((7 * D * (D + std::sqrt(D * D - 3)) - 15) / 18.0); }

}  // namespace closed

inline double analytic_bifurcation_q(double I1, const ModelParams& m, int field, double psi, double omega) {
    const double D = m.delta, w = omega;
    if (field == 1) {
        const double den = closed::C1(I1, D, w);
        if (std::abs(den) <= 1e-14 * std::max(1.0, I1 * I1 * I1 * I1))
            throw LimitRequired("closed-form field-1 spectrum is singular here; approach the limit");
        return 4 * I1 * closed::Q1n(I1, D, psi, w) / den;
    }
    if (field == 2) {
        const double den = closed::C2(I1, D, w);
        if (std::abs(den) <= 1e-14 * std::max(1.0, I1 * I1 * I1 * I1))
            throw LimitRequired("closed-form field-2 spectrum is singular here; approach the limit");
        return 6 * I1 * closed::Q2(I1, D, psi, w) / den;
    }
    throw InvalidParameter("field must be 1 or 2");
}

struct QuadratureOptimum {
    double beta = 0.0;  // in [0, pi)
    double psi = 0.0;
    double q_min = 0.0;
};

struct FrequencyOptimum {
    double omega = 0.0;
    double q_min = 0.0;
};

namespace detail {

template <class F>
double golden_min(F&& f, double a, double b, double tol) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? c : d;
}

}  // namespace detail

// The spectrum is C + a cos 2b + b sin 2b in beta, so after a coarse scan and
// golden-section refinement the minimum is also placed analytically and the
// better of the two (by direct evaluation) is kept.
inline QuadratureOptimum optimal_quadrature(const Linearization& lin, const SteadyState& s, int mode,
                                            double omega) {
    constexpr double pi = std::numbers::pi;
    const auto f = lin.at(omega);
    auto q = [&](double b) { return quad_value(f, mode, b); };
    const int n = 720;
    int kbest = 0;
    double qbest = q(0.0);
    for (int k = 1; k < n; ++k) {
        double v = q(pi * k / n);
        if (v < qbest) {
            qbest = v;
            kbest = k;
        }
    }
    const double h = pi / n;
    double bg = detail::golden_min(q, pi * kbest / n - h, pi * kbest / n + h, 1e-12);
    double best_b = bg, best_q = q(bg);

    const double q0 = q(0.0), q1 = q(0.25 * pi), q2 = q(0.5 * pi);
    const double C = 0.5 * (q0 + q2), a = 0.5 * (q0 - q2), b = q1 - C;
    if (a != 0.0 || b != 0.0) {
        double ba = 0.5 * (std::atan2(b, a) + pi);
        double qa = q(ba);
        if (qa <= best_q) {
            best_q = qa;
            best_b = ba;
        }
    }
    best_b = std::fmod(best_b, pi);
    if (best_b < 0) best_b += pi;
    QuadratureOptimum o;
    o.beta = best_b;
    o.q_min = best_q;
    o.psi = psi_from_beta(best_b, s.phi1, lin.params().eta);
    return o;
}

inline QuadratureOptimum optimal_quadrature(const SteadyState& s, const ModelParams& m, int mode, double omega) {
    return optimal_quadrature(Linearization(s, m), s, mode, omega);
}

inline double default_omega_max(const ModelParams& m) { return 10.0 + 5.0 * std::abs(m.delta); }

// Scan on a merged linear + logarithmic grid, then golden-section refinement.
// omega = 0 is replaced by 1e-4 when the state is marginal.
inline FrequencyOptimum optimal_frequency(const Linearization& lin, int mode, double beta,
                                          std::optional<double> omega_max = std::nullopt) {
    const double wmax = omega_max.value_or(default_omega_max(lin.params()));
    const double lo = lin.singular_at(0.0) ? 1e-4 : 0.0;
    std::vector<double> grid;
    grid.push_back(lo);
    const int n = 400;
    const double l0 = std::log(std::max(lo, 1e-4)), l1 = std::log(wmax);
    for (int k = 0; k < n; ++k) {
        grid.push_back(std::exp(l0 + (l1 - l0) * (k + 1) / n));
        grid.push_back(lo + (wmax - lo) * (k + 1) / n);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    grid.erase(std::remove_if(grid.begin(), grid.end(), [&](double w) { return w > wmax; }), grid.end());

    auto q = [&](double w) { return quad_value(lin.at(w), mode, beta); };
    std::vector<double> vals(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) vals[k] = q(grid[k]);
    std::size_t kb = std::min_element(vals.begin(), vals.end()) - vals.begin();
    FrequencyOptimum o{grid[kb], vals[kb]};
    const double a = grid[kb > 0 ? kb - 1 : 0];
    const double b = grid[std::min(kb + 1, grid.size() - 1)];
    if (b > a) {
        double w = detail::golden_min(q, a, b, 1e-10 * std::max(1.0, b));
        double v = q(w);
        if (v < o.q_min) o = {w, v};
    }
    return o;
}

inline FrequencyOptimum optimal_frequency(const SteadyState& s, const ModelParams& m, int mode, double beta) {
    return optimal_frequency(Linearization(s, m), mode, beta);
}

// ---------------------------------------------------------------------------
// Operating points at (or next to) the three singlemode bifurcations.

enum class BifurcationKind { Polarization, Up, Down };

struct BifurcationPoint {
    double E2;
    double I;
};

inline BifurcationPoint bifurcation_point(const ModelParams& m, BifurcationKind kind) {
    if (kind == BifurcationKind::Polarization) {
        auto p = polarization_threshold(m);
        return {p.E2_pol, p.I_pol};
    }
    auto r = bistability_range(m);
    if (!r) throw InvalidParameter("tangent bifurcations need delta >= sqrt(3)");
    FoldPoint f = kind == BifurcationKind::Up ? r->up_fold() : r->down_fold();
    return {f.E2, f.I};
}

// State at the bifurcation itself (offset 0) or at relative pump offset eps on
// the stable side: below the polarization and down folds, above the up fold.
inline SteadyState bifurcation_state(const ModelParams& m, BifurcationKind kind, double eps) {
    const BifurcationPoint bp = bifurcation_point(m, kind);
    if (eps == 0.0) return singlemode_state(bp.E2, m, bp.I);
    const double E2 = kind == BifurcationKind::Up ? bp.E2 * (1.0 + eps) : bp.E2 * (1.0 - eps);
    auto roots = singlemode_intensities(E2, m);
    if (roots.empty()) throw InternalInconsistency("no singlemode root next to the bifurcation");
    double I = roots.front();
    if (kind == BifurcationKind::Up) {
        I = roots.back();
    } else if (kind == BifurcationKind::Polarization) {
        for (double r : roots)
            if (std::abs(r - bp.I) < std::abs(I - bp.I)) I = r;
    }
    return singlemode_state(E2, m, I);
}

}  // namespace vkerr
