#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "vkerr/errors.hpp"
#include "vkerr/linfluct.hpp"
#include "vkerr/parallel.hpp"
#include "vkerr/squeeze.hpp"
#include "vkerr/steady.hpp"

namespace vkerr {

struct StokesMeans {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;

    double operator[](int k) const { return k == 0 ? s0 : k == 1 ? s1 : k == 2 ? s2 : s3; }
};

struct StokesVariances {
    double omega = 0.0;
    std::array<double, 4> v{};
    std::array<double, 4> v_norm{1.0, 1.0, 1.0, 1.0};
};

struct SqueezeWitness {
    int l, m, k;
    double v_l, ratio, v_k;
};

struct PolSqueezeVerdict {
    std::optional<int> squeezed_param;
    std::vector<SqueezeWitness> witness;
};

inline StokesMeans stokes_means(const SteadyState& s) {
    StokesMeans r;
    r.s0 = s.I1 + s.I2;
    r.s1 = s.I1 - s.I2;
    if (s.I2 > 0.0 && s.I1 > 0.0) {
        const double amp = 2.0 * std::sqrt(s.I1 * s.I2);
        const double d = s.phi2 - s.phi1;
        r.s2 = amp * std::cos(d);
        r.s3 = amp * std::sin(d);
    }
    return r;
}

// Symmetric-ordered single-mode spectra plus normal-ordered cross terms
// 2 u^T (M + M^T) w, weighted by the mean-field amplitudes.
inline StokesVariances stokes_variance_spectra(const Linearization& lin, const SteadyState& s, double omega) {
    constexpr double h = 0.5 * std::numbers::pi;
    const auto f = lin.at(omega);
    const double I1 = s.I1, I2 = s.I2, r = std::sqrt(I1 * I2);
    const double p1 = s.phi1, p2 = s.phi2;
    auto q1 = [&](double b) { return 1.0 + quad_value(f, 1, b); };
    auto q2 = [&](double b) { return 1.0 + quad_value(f, 2, b); };
    auto cross = [&](double b1, double b2) {
        return cross_value(f, CrossOrder::c12, b1, b2) + cross_value(f, CrossOrder::c21, b1, b2);
    };
    StokesVariances out;
    out.omega = omega;
    const double S0 = I1 + I2;
    if (S0 == 0.0) {
        out.v = {0.0, 0.0, 0.0, 0.0};
        return out;
    }
    cd V[4];
    if (I2 > 0.0) {
        const cd x01 = r * cross(p1, p2);
        V[0] = I1 * q1(p1) + I2 * q2(p2) + x01;
        V[1] = I1 * q1(p1) + I2 * q2(p2) - x01;
        V[2] = I2 * q1(p2) + I1 * q2(p1) + r * cross(p2, p1);
        V[3] = I2 * q1(p2 + h) + I1 * q2(p1 + h) - r * cross(p2 + h, p1 + h);
    } else {
        V[0] = V[1] = I1 * q1(p1);
        V[2] = I1 * q2(p1);
        V[3] = I1 * q2(p1 + h);
    }
    for (int k = 0; k < 4; ++k) {
        out.v[k] = detail::checked_real(V[k], "Stokes variance");
        out.v_norm[k] = out.v[k] / S0;
    }
    return out;
}

inline StokesVariances stokes_variance_spectra(const SteadyState& s, const ModelParams& m, double omega) {
    return stokes_variance_spectra(Linearization(s, m), s, omega);
}

// Closed forms on the singlemode branch in terms of the field-1 and field-2
// spectral denominators.
inline StokesVariances bifurcation_stokes(double I, const ModelParams& m, double omega) {
    const double D = m.delta;
    const double c1 = closed::C1(I, D, omega), c2 = closed::C2(I, D, omega);
    const double scale = std::max(1.0, I * I * I * I);
    if (std::abs(c1) <= 1e-14 * scale || std::abs(c2) <= 1e-14 * scale)
        throw LimitRequired("Stokes closed form is singular here; approach the limit");
    StokesVariances out;
    out.omega = omega;
    const double v01 = 1.0 + 8.0 * I * (D - I) / c1;
    const double v2 = 1.0 + 12.0 * I * (I + 2.0 * D) / c2;
    const double v3 = 1.0 + 2.0 * (I - D) / (I + 2.0 * D) * (v2 - 1.0);
    out.v_norm = {v01, v01, v2, v3};
    for (int k = 0; k < 4; ++k) out.v[k] = I * out.v_norm[k];
    return out;
}

inline PolSqueezeVerdict classify_polarization(const StokesMeans& means, const StokesVariances& v,
                                               double margin = 1e-9) {
    PolSqueezeVerdict out;
    if (!(means.s0 > 0.0)) return out;
    for (int l = 1; l <= 3; ++l)
        for (int mm = 1; mm <= 3; ++mm)
            for (int k = 1; k <= 3; ++k) {
                if (l == mm || mm == k || l == k) continue;
                const double ratio = std::abs(means[mm] / means.s0);
                const double vl = v.v_norm[l], vk = v.v_norm[k];
                if (vl < ratio - margin && ratio < vk - margin) {
                    out.witness.push_back({l, mm, k, vl, ratio, vk});
                    if (!out.squeezed_param) out.squeezed_param = l;
                }
            }
    return out;
}

// ---------------------------------------------------------------------------

struct PumpScanRow {
    double E2 = 0.0;
    bool flagged = false;  // no stable state at this pump
    std::optional<SteadyState> state;
    StokesMeans means;
    std::array<double, 4> min_v{};
    std::array<double, 4> argmin_omega{};
    PolSqueezeVerdict verdict;
};

// Stokes frequency grid: log-dense on [1e-3, omega_max], plus 0 if the state allows.
inline FrequencyGrid stokes_grid(const Linearization& lin, std::size_t n = 300) {
    const double wmax = default_omega_max(lin.params());
    return FrequencyGrid::log_dense(1e-3, wmax, n, !lin.singular_at(0.0));
}

inline PumpScanRow stokes_row(const SteadyState& s, const ModelParams& m, const FrequencyGrid* grid = nullptr) {
    PumpScanRow row;
    row.E2 = m.E2();
    row.state = s;
    row.means = stokes_means(s);
    Linearization lin(s, m);
    FrequencyGrid g = grid ? *grid : stokes_grid(lin);
    row.min_v.fill(std::numeric_limits<double>::infinity());
    for (double w : g) {
        if (w == 0.0 && lin.singular_at(0.0)) continue;
        StokesVariances v = stokes_variance_spectra(lin, s, w);
        for (int k = 0; k < 4; ++k)
            if (v.v_norm[k] < row.min_v[k]) {
                row.min_v[k] = v.v_norm[k];
                row.argmin_omega[k] = w;
            }
        PolSqueezeVerdict pv = classify_polarization(row.means, v);
        for (const auto& wt : pv.witness) {
            bool seen = false;
            for (const auto& x : row.verdict.witness) seen = seen || (x.l == wt.l && x.m == wt.m && x.k == wt.k);
            if (!seen) row.verdict.witness.push_back(wt);
            if (!row.verdict.squeezed_param || wt.l < *row.verdict.squeezed_param) row.verdict.squeezed_param = wt.l;
        }
    }
    return row;
}

// Stable states at one pump: stable singlemode roots, else stable bimode states
// (both phase twins).
inline std::vector<SteadyState> stable_states(double E2, const ModelParams& m) {
    std::vector<SteadyState> out;
    for (auto& s : singlemode_states(E2, m))
        if (s.stable == Stability::Stable) out.push_back(s);
    if (out.empty() && E2 > 0.0)
        for (auto& s : bimode_states(E2, m))
            if (s.stable == Stability::Stable) out.push_back(s);
    return out;
}

inline std::vector<PumpScanRow> pump_scan(const ModelParams& m, const std::vector<double>& E2_values,
                                          const FrequencyGrid* grid = nullptr) {
    for (double e : E2_values)
        if (!(e > 0.0) || !std::isfinite(e)) throw InvalidParameter("pump scan values must be finite and positive");
    std::vector<std::vector<PumpScanRow>> per(E2_values.size());
    parallel_for(E2_values.size(), [&](std::size_t i) {
        const double E2 = E2_values[i];
        ModelParams mp = m.at_pump(E2);
        auto states = stable_states(E2, mp);
        if (states.empty()) {
            PumpScanRow row;
            row.E2 = E2;
            row.flagged = true;
            row.min_v.fill(std::numeric_limits<double>::quiet_NaN());
            per[i].push_back(row);
            return;
        }
        for (const auto& s : states) {
            per[i].push_back(stokes_row(s, mp, grid));
            per[i].back().E2 = E2;
        }
    });
    std::vector<PumpScanRow> out;
    for (auto& v : per)
        for (auto& r : v) out.push_back(std::move(r));
    return out;
}

}  // namespace vkerr
