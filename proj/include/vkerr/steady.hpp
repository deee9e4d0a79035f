#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "vkerr/errors.hpp"
#include "vkerr/model.hpp"
#include "vkerr/params.hpp"

namespace vkerr {

enum class Branch { Singlemode, BimodePlus, BimodeMinus };
enum class Stability { Stable, Unstable, Marginal };

inline const char* to_string(Branch b) {
    switch (b) {
        case Branch::Singlemode: return "singlemode";
        case Branch::BimodePlus: return "bimode_plus";
        case Branch::BimodeMinus: return "bimode_minus";
    }
    return "?";
}

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Marginal: return "marginal";
    }
    return "?";
}

struct SteadyState {
    Branch branch = Branch::Singlemode;
    bool phase_partner = false;
    double I1 = 0.0;
    double I2 = 0.0;
    double phi1 = 0.0;
    double phi2 = 0.0;
    cd a1{};
    cd a2{};
    Stability stable = Stability::Stable;

    Vec4c point() const { return phase_point(a1, a2); }
};

struct FoldPoint {
    double E2;
    double I;
};

// E2_minus < E2_plus and I_minus < I_plus. The upper branch ends at I_plus
// (reached at E2_minus); the lower branch ends at I_minus (reached at E2_plus).
struct BistableRange {
    double E2_minus;
    double E2_plus;
    double I_minus;
    double I_plus;

    FoldPoint up_fold() const { return {E2_minus, I_plus}; }
    FoldPoint down_fold() const { return {E2_plus, I_minus}; }
};

struct PolarizationThreshold {
    double E2_pol;
    double I_pol;
};

struct BifurcationSet {
    std::optional<BistableRange> bistable;
    std::optional<PolarizationThreshold> polarization;
};

inline double wrap_angle(double x) {
    constexpr double pi = std::numbers::pi;
    double r = std::remainder(x, 2.0 * pi);
    if (r <= -pi) r += 2.0 * pi;
    return r;
}

// Singlemode pump curve E^2(I) and its derivative.
inline double singlemode_pump(double I, double delta) {
    double d = delta - I;
    return I * (1.0 + d * d);
}

inline double singlemode_pump_slope(double I, double delta) {
    return 3.0 * I * I - 4.0 * delta * I + delta * delta + 1.0;
}

inline std::vector<double> singlemode_intensities(double E2, const ModelParams& m) {
    if (!(E2 >= 0.0)) throw InvalidParameter("pump E^2 must be non-negative");
    if (E2 == 0.0) return {0.0};
    const double D = m.delta;
    auto p = [&](double I) { return singlemode_pump(I, D) - E2; };
    auto dp = [&](double I) { return singlemode_pump_slope(I, D); };

    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
    C(0, 0) = 2.0 * D;
    C(0, 1) = -(D * D + 1.0);
    C(0, 2) = E2;
    C(1, 0) = 1.0;
    C(2, 1) = 1.0;
    Eigen::EigenSolver<Eigen::Matrix3d> es(C, false);
    const auto ev = es.eigenvalues();

    const double scale = std::max({1.0, std::abs(E2), D * D});
    std::vector<double> crit;
    const double disc = D * D - 3.0;
    if (disc >= 0.0) {
        crit.push_back((2.0 * D - std::sqrt(disc)) / 3.0);
        crit.push_back((2.0 * D + std::sqrt(disc)) / 3.0);
    }
    auto double_root_near = [&](double x) -> std::optional<double> {
        for (double c : crit)
            if (std::abs(c - x) < 1e-5 * std::max(1.0, std::abs(c)) && std::abs(p(c)) <= 1e-12 * scale) return c;
        return std::nullopt;
    };

    std::vector<double> roots;
    std::vector<bool> used(3, false);
    for (int k = 0; k < 3; ++k) {
        if (used[k]) continue;
        const cd z = ev(k);
        const double re = z.real();
        if (std::abs(z.imag()) < 1e-10 * std::max(1.0, std::abs(re))) {
            used[k] = true;
            if (auto c = double_root_near(re)) {
                roots.push_back(*c);
                continue;
            }
            double x = re;
            for (int it = 0; it < 8; ++it) {
                double d = dp(x);
                if (d == 0.0) break;
                double step = p(x) / d;
                x -= step;
                if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
            }
            roots.push_back(x);
        } else if (std::abs(z.imag()) < 1e-6 * std::max(1.0, std::abs(re))) {
            // A double root can come back as a tight complex pair.
            if (auto c = double_root_near(re)) {
                used[k] = true;
                for (int l = k + 1; l < 3; ++l)
                    if (!used[l] && std::abs(ev(l) - std::conj(z)) < 1e-9 * std::max(1.0, std::abs(re))) {
                        used[l] = true;
                        break;
                    }
                roots.push_back(*c);
                roots.push_back(*c);
            }
        }
    }
    // Two real eigenvalues straddling a double root collapse onto it.
    std::sort(roots.begin(), roots.end());
    for (double c : crit) {
        if (std::abs(p(c)) > 1e-12 * scale) continue;
        int near = 0;
        for (double& r : roots)
            if (std::abs(r - c) < 1e-5 * std::max(1.0, std::abs(c))) {
                r = c;
                ++near;
            }
        if (near == 1) roots.push_back(c);
    }
    std::vector<double> out;
    for (double r : roots)
        if (r > 0.0) out.push_back(r);
    std::sort(out.begin(), out.end());
    return out;
}

inline Stability classify_eigenvalues(const ComplexMatrix4& J, double tol = 1e-8) {
    Eigen::ComplexEigenSolver<ComplexMatrix4> es(J, false);
    bool marginal = false;
    for (int k = 0; k < 4; ++k) {
        const double re = es.eigenvalues()(k).real();
        if (re > tol) return Stability::Unstable;
        if (std::abs(re) <= tol) marginal = true;
    }
    return marginal ? Stability::Marginal : Stability::Stable;
}

inline Stability classify_stability(const SteadyState& s, const ModelParams& m, double tol = 1e-8) {
    return classify_eigenvalues(drift_jacobian(s.point(), m), tol);
}

// Singlemode state with the given intensity (which fixes the pump when none is
// supplied). The arccos phase sign is picked by residual, then the amplitude
// is taken from E = a1 (1 + i eta (delta - I)) to keep full precision.
inline SteadyState singlemode_state(double E2, const ModelParams& mp, double I) {
    ModelParams m = mp.at_pump(E2);
    SteadyState s;
    s.branch = Branch::Singlemode;
    if (E2 == 0.0) {
        s.stable = classify_stability(s, m);
        return s;
    }
    if (!(I > 0.0)) throw InvalidParameter("singlemode intensity must be positive for E^2 > 0");
    const double E = m.E;
    const double c = std::clamp(std::sqrt(I) / E, -1.0, 1.0);
    const double phi = std::acos(c);
    const double sqI = std::sqrt(I);
    const double r_plus = classical_residual(std::polar(sqI, phi), 0.0, m);
    const double r_minus = classical_residual(std::polar(sqI, -phi), 0.0, m);
    const double chosen = (r_minus < r_plus) ? -phi : phi;

    const cd exact = E / (1.0 + I_unit * double(m.eta) * (m.delta - I));
    const double tol = 1e-6 * std::max(1.0, E2);
    if (std::min(r_plus, r_minus) > tol && std::abs(std::arg(exact) - chosen) > 1e-4)
        throw InternalInconsistency("singlemode phase: no sign satisfies the steady equations");
    s.a1 = exact;
    s.I1 = std::norm(exact);
    s.phi1 = std::arg(exact);
    if (classical_residual(s.a1, 0.0, m) > 1e-9 * std::max(1.0, E2 * E))
        throw InternalInconsistency("singlemode residual above tolerance; intensity is not a root");
    s.stable = classify_stability(s, m);
    return s;
}

// Singlemode state parameterized by intensity alone.
inline SteadyState singlemode_state_at_intensity(double I, const ModelParams& m) {
    return singlemode_state(singlemode_pump(I, m.delta), m, I);
}

inline std::vector<SteadyState> singlemode_states(double E2, const ModelParams& m) {
    std::vector<SteadyState> out;
    std::vector<double> roots = singlemode_intensities(E2, m);
    for (std::size_t k = 0; k < roots.size(); ++k) {
        if (k > 0 && roots[k] == roots[k - 1]) continue;
        out.push_back(singlemode_state(E2, m, roots[k]));
    }
    return out;
}

namespace detail {

// Newton refinement of (a1, a2) on the classical equations, in real coordinates.
inline void polish_bimode(cd& a1, cd& a2, const ModelParams& m) {
    double best = classical_residual(a1, a2, m);
    for (int it = 0; it < 20 && best > 1e-15; ++it) {
        Vec4c pt = phase_point(a1, a2);
        Vec4c F = drift(pt, m);
        ComplexMatrix4 J = drift_jacobian(pt, m);
        // dF_k = J_k0 da1 + J_k1 conj(da1) + J_k2 da2 + J_k3 conj(da2), k in {0, 2}.
        Eigen::Matrix4d R;
        Eigen::Vector4d rhs;
        const int rows[2] = {0, 2};
        for (int r = 0; r < 2; ++r) {
            int k = rows[r];
            cd dre1 = J(k, 0) + J(k, 1), dim1 = I_unit * (J(k, 0) - J(k, 1));
            cd dre2 = J(k, 2) + J(k, 3), dim2 = I_unit * (J(k, 2) - J(k, 3));
            R.row(2 * r) << dre1.real(), dim1.real(), dre2.real(), dim2.real();
            R.row(2 * r + 1) << dre1.imag(), dim1.imag(), dre2.imag(), dim2.imag();
            rhs(2 * r) = -F(k).real();
            rhs(2 * r + 1) = -F(k).imag();
        }
        Eigen::Vector4d d = R.fullPivLu().solve(rhs);
        if (!d.allFinite()) break;
        cd n1 = a1 + cd(d(0), d(1));
        cd n2 = a2 + cd(d(2), d(3));
        double r = classical_residual(n1, n2, m);
        if (!(r < best)) break;
        a1 = n1;
        a2 = n2;
        best = r;
    }
}

}  // namespace detail

// Both sign branches of I2(I1), each physical root emitted with its phase twin.
inline std::vector<SteadyState> bimode_states(double E2, const ModelParams& mp) {
    if (!(E2 > 0.0)) throw InvalidParameter("bimode states need E^2 > 0");
    ModelParams m = mp.at_pump(E2);
    std::vector<SteadyState> out;
    if (m.B_mt == 0.0) return out;
    const double D = m.delta, A = m.A_mt, hB = 0.5 * std::abs(m.B_mt), E = m.E;

    const double lo = std::max(1.0 / hB, 1e-6);
    const double hi = std::max(4.0 * (D + E) + 10.0, E2);
    if (!(hi > lo)) return out;
    const int n = 2000;

    for (int sigma : {+1, -1}) {
        auto I2f = [&](double I1) { return D - A * I1 + sigma * std::sqrt(std::max(hB * hB * I1 * I1 - 1.0, 0.0)); };
        auto f = [&](double I1) {
            double I2 = I2f(I1);
            double s = I1 + I2, d = I1 - I2, t = s - D;
            return E2 * I1 - s * s - d * d * t * t;
        };
        std::vector<double> roots;
        double x0 = lo, f0 = f(lo);
        for (int k = 1; k <= n; ++k) {
            double x1 = lo + (hi - lo) * k / n;
            double f1 = f(x1);
            if (f0 == 0.0) {
                roots.push_back(x0);
            } else if (f0 * f1 < 0.0) {
                double a = x0, b = x1, fa = f0;
                while (b - a > 1e-12 * std::max(1.0, a)) {
                    double c = 0.5 * (a + b);
                    double fc = f(c);
                    if (fc == 0.0) {
                        a = b = c;
                        break;
                    }
                    if ((fc < 0.0) == (fa < 0.0)) {
                        a = c;
                        fa = fc;
                    } else {
                        b = c;
                    }
                }
                roots.push_back(0.5 * (a + b));
            }
            x0 = x1;
            f0 = f1;
        }

        for (double I1 : roots) {
            double I2 = I2f(I1);
            if (!(I2 >= 0.0)) continue;
            double c1 = std::sqrt(I1) / E * (1.0 + I2 / I1);
            if (std::abs(c1) > 1.0 + 1e-9) continue;
            double base1 = std::acos(std::clamp(c1, -1.0, 1.0));
            // Two candidate numerators for the relative phase; residual decides.
            const double nums[2] = {D - I2 - A * I1, D - I1 - A * I2};
            double best = std::numeric_limits<double>::infinity();
            cd b1{}, b2{};
            double bp1 = 0, bp2 = 0;
            for (double s1 : {1.0, -1.0}) {
                double p1 = s1 * base1;
                for (double num : nums) {
                    double c2 = num / (hB * I1);
                    if (std::abs(c2) > 1.0 + 1e-9) continue;
                    double base2 = 0.5 * std::acos(std::clamp(c2, -1.0, 1.0));
                    for (double s2 : {1.0, -1.0}) {
                        double p2 = p1 + s2 * base2;
                        cd z1 = std::polar(std::sqrt(I1), p1), z2 = std::polar(std::sqrt(I2), p2);
                        double r = classical_residual(z1, z2, m);
                        bool better = r < best * (1.0 - 1e-12) ||
                                      (std::abs(r - best) <= 1e-12 * best &&
                                       std::abs(wrap_angle(p2)) < std::abs(wrap_angle(bp2)));
                        if (better) {
                            best = r;
                            b1 = z1;
                            b2 = z2;
                            bp1 = p1;
                            bp2 = p2;
                        }
                    }
                }
            }
            if (!std::isfinite(best)) continue;
            // Unphysical candidates never get close to a solution.
            if (best > 1e-3 * std::max(1.0, E2 * E)) continue;
            detail::polish_bimode(b1, b2, m);
            if (classical_residual(b1, b2, m) > 1e-9)
                throw InternalInconsistency("bimode state residual above tolerance after refinement");
            (void)bp1;
            SteadyState s;
            s.branch = sigma > 0 ? Branch::BimodePlus : Branch::BimodeMinus;
            s.a1 = b1;
            s.a2 = b2;
            s.I1 = std::norm(b1);
            s.I2 = std::norm(b2);
            s.phi1 = std::arg(b1);
            s.phi2 = std::arg(b2);
            s.stable = classify_stability(s, m);
            out.push_back(s);
            SteadyState twin = s;
            twin.phase_partner = true;
            twin.a2 = -b2;
            twin.phi2 = std::arg(twin.a2);
            twin.stable = classify_stability(twin, m);
            out.push_back(twin);
        }
    }
    return out;
}

inline std::optional<BistableRange> bistability_range(const ModelParams& m) {
    const double D = m.delta;
    const double root3 = std::sqrt(3.0);
    if (std::abs(D - root3) <= 1e-12) {
        const double I = 2.0 * D / 3.0;
        const double E2 = 2.0 / 27.0 * D * (D * D + 9.0);
        return BistableRange{E2, E2, I, I};
    }
    if (D < root3) return std::nullopt;
    const double s = std::sqrt(D * D - 3.0);
    const double a = 2.0 / 27.0 * D * (D * D + 9.0);
    const double b = 2.0 / 27.0 * s * s * s;
    return BistableRange{a - b, a + b, (2.0 * D - s) / 3.0, (2.0 * D + s) / 3.0};
}

// Pump at which the orthogonal mode's block of the singlemode Jacobian has a
// zero eigenvalue: (B/2)^2 I^2 = 1 + (delta - A I)^2.
inline PolarizationThreshold polarization_threshold(const ModelParams& m) {
    if (m.B_mt == 0.0) throw NoThreshold("polarization threshold diverges for B = 0");
    const double D = m.delta, A = m.A_mt, hB = 0.5 * m.B_mt;
    const double a = hB * hB - A * A, b = 2.0 * A * D, c = -(D * D + 1.0);
    double I = std::numeric_limits<double>::quiet_NaN();
    if (std::abs(a) < 1e-15) {
        if (b > 0.0) I = -c / b;
    } else {
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            // Cancellation-free pair of roots.
            const double qq = -0.5 * (b + std::copysign(sq, b == 0.0 ? 1.0 : b));
            double r1 = qq / a, r2 = (qq != 0.0) ? c / qq : r1;
            double lo = std::min(r1, r2), hi = std::max(r1, r2);
            I = lo > 0.0 ? lo : (hi > 0.0 ? hi : I);
        }
    }
    if (!(I > 0.0)) throw NoThreshold("no positive polarization threshold for these coefficients");
    return {singlemode_pump(I, D), I};
}

inline BifurcationSet bifurcations(const ModelParams& m) {
    BifurcationSet b;
    b.bistable = bistability_range(m);
    if (m.B_mt != 0.0) {
        try {
            b.polarization = polarization_threshold(m);
        } catch (const NoThreshold&) {
        }
    }
    return b;
}

// All classical steady states at a pump, singlemode roots first.
inline std::vector<SteadyState> steady_states(double E2, const ModelParams& m) {
    std::vector<SteadyState> out = singlemode_states(E2, m);
    if (E2 > 0.0) {
        auto bi = bimode_states(E2, m);
        out.insert(out.end(), bi.begin(), bi.end());
    }
    return out;
}

// RK4 on the classical equations until the drift norm drops below 1e-10, then
// snaps to the closest analytically known state.
inline SteadyState relax(const ModelParams& m, cd a1_0, cd a2_0, double t_max, double dt = 0.01) {
    if (!(t_max > 0.0)) throw InvalidParameter("t_max must be positive");
    auto rhs = [&](cd x1, cd x2) {
        Vec4c r = drift(phase_point(x1, x2), m);
        return std::array<cd, 2>{r(0), r(2)};
    };
    cd x1 = a1_0, x2 = a2_0;
    double t = 0.0;
    bool settled = false;
    while (t < t_max) {
        auto k1 = rhs(x1, x2);
        if (std::hypot(std::abs(k1[0]), std::abs(k1[1])) < 1e-10) {
            settled = true;
            break;
        }
        auto k2 = rhs(x1 + 0.5 * dt * k1[0], x2 + 0.5 * dt * k1[1]);
        auto k3 = rhs(x1 + 0.5 * dt * k2[0], x2 + 0.5 * dt * k2[1]);
        auto k4 = rhs(x1 + dt * k3[0], x2 + dt * k3[1]);
        x1 += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        x2 += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        if (!std::isfinite(std::abs(x1)) || !std::isfinite(std::abs(x2)))
            throw NonConvergence("classical trajectory diverged");
        t += dt;
    }
    if (!settled) throw NonConvergence("trajectory did not settle within t_max");

    const auto candidates = steady_states(m.E2(), m);
    const SteadyState* best = nullptr;
    double dist = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        double d = std::hypot(std::abs(c.a1 - x1), std::abs(c.a2 - x2));
        if (d < dist) {
            dist = d;
            best = &c;
        }
    }
    if (best && dist < 1e-6) return *best;
    SteadyState s;
    s.a1 = x1;
    s.a2 = x2;
    s.I1 = std::norm(x1);
    s.I2 = std::norm(x2);
    s.phi1 = std::arg(x1);
    s.phi2 = s.I2 > 0.0 ? std::arg(x2) : 0.0;
    s.branch = s.I2 < 1e-12 ? Branch::Singlemode : Branch::BimodePlus;
    s.stable = classify_stability(s, m);
    return s;
}

inline SteadyState relax(const ModelParams& m, cd a1_0, double t_max) { return relax(m, a1_0, cd{}, t_max); }

}  // namespace vkerr
