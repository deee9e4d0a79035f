#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "vkerr/cli/csv.hpp"
#include "vkerr/parallel.hpp"
#include "vkerr/squeeze.hpp"
#include "vkerr/steady.hpp"
#include "vkerr/stokes.hpp"

namespace vkerr::cli {

struct Table {
    std::string name;    // file name
    std::string schema;  // versioned column contract
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = n == 1 ? a : a + (b - a) * double(k) / double(n - 1);
    if (n > 1) v.back() = b;
    return v;
}

inline std::vector<double> logspace(double a, double b, std::size_t n) {
    auto e = linspace(std::log(a), std::log(b), n);
    for (auto& x : e) x = std::exp(x);
    e.front() = a;
    e.back() = b;
    return e;
}

inline std::string branch_label(const SteadyState& s) {
    std::string b = to_string(s.branch);
    return s.phase_partner ? b + "_twin" : b;
}

inline std::string witness_label(const PolSqueezeVerdict& v) {
    std::string out;
    for (const auto& w : v.witness) {
        if (!out.empty()) out += ';';
        out += std::to_string(w.l) + "-" + std::to_string(w.m) + "-" + std::to_string(w.k);
    }
    return out;
}

inline std::vector<std::string> steady_row(double E2, const SteadyState& s) {
    return {fmt(E2), branch_label(s), fmt(s.I1), fmt(s.I2), fmt(s.phi1), fmt(s.phi2), to_string(s.stable)};
}

inline const std::vector<std::string>& steady_header() {
    static const std::vector<std::string> h{"E2", "branch", "I1", "I2", "phi1", "phi2", "stable"};
    return h;
}

// Runs f over xs in parallel and concatenates the produced rows in order.
template <class F>
std::vector<std::vector<std::string>> rows_over(const std::vector<double>& xs, F&& f) {
    std::vector<std::vector<std::vector<std::string>>> parts(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { parts[i] = f(xs[i]); });
    std::vector<std::vector<std::string>> out;
    for (auto& p : parts)
        for (auto& r : p) out.push_back(std::move(r));
    return out;
}

inline double beta_at_psi(const SteadyState& s, const ModelParams& m, double psi) {
    return beta_from_psi(psi, s.phi1, m.eta);
}

// Optimum-versus-detuning curves are taken at the bifurcation itself, where the
// optimizer steps around omega = 0; figures that include omega = 0 need an offset.
inline double default_figure_epsilon(int id) { return id == 4 || id == 6 || id == 8 ? 0.0 : 1e-6; }

inline std::vector<Table> figure_tables(int id, const ModelParams& base, double eps) {
    constexpr double pi = std::numbers::pi;
    const double r3 = std::sqrt(3.0);
    auto at = [&](double delta) {
        ModelParams m = base;
        m.delta = delta;
        return m;
    };
    std::vector<Table> t;
    switch (id) {
        case 1: {
            Table a{"figure1_bifurcations.csv", "vkerr.fig1a/1", {"delta", "E2_down", "E2_up", "E2_pol"}, {}};
            a.rows = rows_over(linspace(0.0, 5.0, 251), [&](double d) {
                ModelParams m = at(d);
                auto b = bistability_range(m);
                auto p = polarization_threshold(m);
                std::vector<std::string> row{fmt(d), "", "", fmt(p.E2_pol)};
                if (b) {
                    row[1] = fmt(b->down_fold().E2);
                    row[2] = fmt(b->up_fold().E2);
                }
                return std::vector<std::vector<std::string>>{row};
            });
            Table b{"figure1_intensities.csv", "vkerr.steady/1", steady_header(), {}};
            b.rows = rows_over(linspace(0.02, 4.0, 200), [&](double E2) {
                std::vector<std::vector<std::string>> rows;
                for (const auto& s : steady_states(E2, at(2.0))) rows.push_back(steady_row(E2, s));
                return rows;
            });
            t = {a, b};
            break;
        }
        case 2: {
            Table a{"figure2_psi_opt.csv", "vkerr.fig2/1", {"delta", "psi_opt", "beta_minus_phi1", "psi_closed_form"}, {}};
            a.rows = rows_over(linspace(-10.0, 10.0, 201), [&](double d) {
                ModelParams m = at(d);
                auto s = bifurcation_state(m, BifurcationKind::Polarization, eps);
                auto o = optimal_quadrature(s, m, 2, 0.0);
                double half = std::remainder(o.beta - s.phi1, pi);
                return std::vector<std::vector<std::string>>{
                    {fmt(d), fmt(o.psi), fmt(half), fmt(closed::psi_pol_opt(d))}};
            });
            ModelParams m0 = at(0.0);
            auto s0 = bifurcation_state(m0, BifurcationKind::Polarization, eps);
            Linearization lin(s0, m0);
            auto o0 = optimal_quadrature(lin, s0, 2, 0.0);
            Table b{"figure2_inset.csv", "vkerr.spectrum/1", {"omega", "q_normal", "q_symmetric", "beta", "psi"}, {}};
            for (double w : linspace(0.0, 5.0, 201)) {
                auto r = quad_spectrum(lin, 2, o0.beta, w);
                b.rows.push_back({fmt(w), fmt(r.normal_ordered), fmt(r.symmetric), fmt(o0.beta), fmt(o0.psi)});
            }
            t = {a, b};
            break;
        }
        case 3:
        case 5:
        case 7: {
            const BifurcationKind kind = id == 3 ? BifurcationKind::Polarization
                                         : id == 5 ? BifurcationKind::Up
                                                   : BifurcationKind::Down;
            const int field = id == 3 ? 1 : 2;
            const double psi = id == 3 ? 0.0 : pi;
            const std::vector<double> deltas = id == 3 ? std::vector<double>{0.0, 2.0} : std::vector<double>{2.0, 5.0};
            Table a{"figure" + std::to_string(id) + "_spectra.csv", "vkerr.fig_spectra/1",
                    {"delta", "omega", "q_normal", "beta", "psi"}, {}};
            for (double d : deltas) {
                ModelParams m = at(d);
                auto s = bifurcation_state(m, kind, eps);
                Linearization lin(s, m);
                double beta = beta_at_psi(s, m, psi);
                for (double w : linspace(0.0, 8.0, 401))
                    a.rows.push_back({fmt(d), fmt(w), fmt(quad_spectrum(lin, field, beta, w).normal_ordered),
                                      fmt(beta), fmt(psi)});
            }
            t = {a};
            break;
        }
        case 4:
        case 6:
        case 8: {
            const BifurcationKind kind = id == 4 ? BifurcationKind::Polarization
                                         : id == 6 ? BifurcationKind::Up
                                                   : BifurcationKind::Down;
            const int field = id == 4 ? 1 : 2;
            const double psi = id == 4 ? 0.0 : pi;
            std::vector<double> deltas = id == 4   ? linspace(-5.0, 5.0, 101)
                                         : id == 6 ? logspace(r3, 100.0, 61)
                                                   : linspace(r3, 10.0, 60);
            Table a{"figure" + std::to_string(id) + "_optimum.csv", "vkerr.fig_optimum/1",
                    {"delta", "q_opt", "omega_opt"}, {}};
            a.rows = rows_over(deltas, [&](double d) {
                ModelParams m = at(d);
                auto s = bifurcation_state(m, kind, eps);
                auto o = optimal_frequency(s, m, field, beta_at_psi(s, m, psi));
                return std::vector<std::vector<std::string>>{{fmt(d), fmt(o.q_min), fmt(o.omega)}};
            });
            t = {a};
            break;
        }
        case 9: {
            Table a{"figure9_v3.csv", "vkerr.fig9/1", {"delta", "minV3_up", "minV3_down"}, {}};
            a.rows = rows_over(linspace(r3 + 0.01, 10.0, 60), [&](double d) {
                ModelParams m = at(d);
                auto up = bifurcation_state(m, BifurcationKind::Up, eps);
                auto dn = bifurcation_state(m, BifurcationKind::Down, eps);
                auto ru = stokes_row(up, m);
                auto rd = stokes_row(dn, m);
                return std::vector<std::vector<std::string>>{{fmt(d), fmt(ru.min_v[3]), fmt(rd.min_v[3])}};
            });
            t = {a};
            break;
        }
        case 10: {
            Table a{"figure10_stokes_means.csv", "vkerr.fig10/1",
                    {"E2", "branch", "I1", "I2", "S1_over_S0", "S2_over_S0", "S3_over_S0"}, {}};
            a.rows = rows_over(linspace(0.05, 8.0, 160), [&](double E2) {
                std::vector<std::vector<std::string>> rows;
                ModelParams m = at(1.0).at_pump(E2);
                for (const auto& s : stable_states(E2, m)) {
                    auto sm = stokes_means(s);
                    rows.push_back({fmt(E2), branch_label(s), fmt(s.I1), fmt(s.I2), fmt(sm.s1 / sm.s0),
                                    fmt(sm.s2 / sm.s0), fmt(sm.s3 / sm.s0)});
                }
                return rows;
            });
            t = {a};
            break;
        }
        case 11: {
            Table a{"figure11_stokes_scan.csv", "vkerr.fig11/1",
                    {"E2", "branch", "minV0", "minV1", "minV2", "minV3", "S1_over_S0", "S2_over_S0", "S3_over_S0",
                     "squeezed_param", "witness"},
                    {}};
            for (const auto& r : pump_scan(at(1.0), linspace(2.1, 8.0, 119))) {
                if (r.flagged) {
                    a.rows.push_back({fmt(r.E2), "none", "", "", "", "", "", "", "", "", "no_stable_state"});
                    continue;
                }
                const auto& sm = r.means;
                a.rows.push_back({fmt(r.E2), branch_label(*r.state), fmt(r.min_v[0]), fmt(r.min_v[1]),
                                  fmt(r.min_v[2]), fmt(r.min_v[3]), fmt(sm.s1 / sm.s0), fmt(sm.s2 / sm.s0),
                                  fmt(sm.s3 / sm.s0),
                                  r.verdict.squeezed_param ? std::to_string(*r.verdict.squeezed_param) : "",
                                  witness_label(r.verdict)});
            }
            t = {a};
            break;
        }
        default:
            throw InvalidParameter("figure id must be in 1..11");
    }
    return t;
}

}  // namespace vkerr::cli
