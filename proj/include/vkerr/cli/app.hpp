#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vkerr/cli/csv.hpp"
#include "vkerr/cli/figures.hpp"
#include "vkerr/cli/manifest.hpp"
#include "vkerr/config.hpp"
#include "vkerr/sdesim.hpp"
#include "vkerr/squeeze.hpp"
#include "vkerr/steady.hpp"
#include "vkerr/stokes.hpp"

namespace vkerr::cli {

enum ExitCode : int { ok = 0, failure = 1, config_error = 2, unstable_point = 3, simulation_failure = 4 };

struct ModelOptions {
    std::string config_path;
    std::optional<double> delta;
    std::optional<int> eta;
    std::optional<double> a_mt;
    std::optional<double> b_mt;
    std::optional<double> pump;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON config (delta, eta, a_mt, b_mt, pump_E2, physical{})");
        app->add_option("--delta", delta, "normalized detuning");
        app->add_option("--eta", eta, "sign of the nonlinearity (+1 or -1)");
        app->add_option("--a-mt", a_mt, "Maker-Terhune A");
        app->add_option("--b-mt", b_mt, "Maker-Terhune B");
        app->add_option("--pump", pump, "pump intensity E^2");
    }

    Config resolve() const {
        Config c = config_path.empty() ? config_from_json(nlohmann::json::object()) : load_config(config_path);
        ModelParams& m = c.model;
        if (delta) {
            if (c.physical) throw InvalidParameter("--delta conflicts with a physical config block");
            m.delta = *delta;
        }
        if (eta) {
            if (*eta != 1 && *eta != -1) throw InvalidParameter("--eta must be +1 or -1");
            m.eta = *eta;
        }
        if (a_mt) m.A_mt = *a_mt;
        if (b_mt) m.B_mt = *b_mt;
        if (pump) {
            if (!(*pump >= 0.0)) throw InvalidParameter("--pump must be non-negative");
            m.E = std::sqrt(*pump);
            c.pump_E2 = *pump;
        }
        m.validate();
        return c;
    }
};

inline BifurcationKind parse_kind(const std::string& s) {
    if (s == "pol") return BifurcationKind::Polarization;
    if (s == "up") return BifurcationKind::Up;
    if (s == "down") return BifurcationKind::Down;
    throw InvalidParameter("--at-bifurcation must be pol, up or down");
}

inline double parse_angle(const std::string& s) {
    if (s == "pi") return std::numbers::pi;
    if (s == "-pi") return -std::numbers::pi;
    if (s == "pi/2") return 0.5 * std::numbers::pi;
    if (s == "-pi/2") return -0.5 * std::numbers::pi;
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw InvalidParameter("bad angle '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw InvalidParameter("bad angle '" + s + "'");
    }
}

inline nlohmann::json model_json(const ModelParams& m) {
    return {{"delta", m.delta}, {"eta", m.eta}, {"a_mt", m.A_mt}, {"b_mt", m.B_mt}, {"pump_E2", m.E2()}};
}

inline void write_table(RunManifest& man, const Table& t) {
    CsvWriter w(man.add_output(t.name, t.schema), t.header);
    for (const auto& r : t.rows) w.row(r);
}

// Picks the operating point: a bifurcation neighbourhood, an explicit state
// index, or the first stable state at the configured pump.
struct PointOptions {
    std::string at_bifurcation;
    double epsilon = 1e-6;
    std::optional<int> state_index;

    void attach(CLI::App* app) {
        app->add_option("--at-bifurcation", at_bifurcation, "pol, up or down")
            ->check(CLI::IsMember({"pol", "up", "down"}));
        app->add_option("--epsilon", epsilon, "relative pump offset from the bifurcation (0 = exactly at it)");
        app->add_option("--state", state_index, "index into the steady-state list at the pump");
    }

    nlohmann::json json() const {
        nlohmann::json j;
        j["at_bifurcation"] = at_bifurcation.empty() ? nlohmann::json(nullptr) : nlohmann::json(at_bifurcation);
        j["epsilon"] = epsilon;
        j["state"] = state_index ? nlohmann::json(*state_index) : nlohmann::json(nullptr);
        return j;
    }

    std::pair<SteadyState, ModelParams> select(const ModelParams& m, double pump_E2) const {
        if (!at_bifurcation.empty()) {
            if (!(epsilon >= 0.0)) throw InvalidParameter("--epsilon must be non-negative");
            auto kind = parse_kind(at_bifurcation);
            auto bp = bifurcation_point(m, kind);
            double E2 = epsilon == 0.0 ? bp.E2
                        : kind == BifurcationKind::Up ? bp.E2 * (1.0 + epsilon)
                                                       : bp.E2 * (1.0 - epsilon);
            return {bifurcation_state(m, kind, epsilon), m.at_pump(E2)};
        }
        auto all = steady_states(pump_E2, m);
        if (state_index) {
            if (*state_index < 0 || std::size_t(*state_index) >= all.size())
                throw InvalidParameter("--state index out of range");
            const auto& s = all[std::size_t(*state_index)];
            if (s.stable == Stability::Unstable)
                throw UnstableState("selected operating point is unstable");
            return {s, m};
        }
        for (const auto& s : all)
            if (s.stable == Stability::Stable) return {s, m};
        throw UnstableState("no stable steady state at this pump");
    }
};

struct Runner {
    std::vector<std::string> argv;
    std::string out_dir = ".";

    // steady
    ModelOptions steady_model;
    std::vector<double> steady_range;

    // bifurcations
    ModelOptions bif_model;
    std::vector<double> scan_delta;

    // spectrum
    ModelOptions spec_model;
    PointOptions spec_point;
    int spec_mode = 1;
    std::optional<std::string> spec_beta, spec_psi;
    bool spec_optimal = false;
    std::optional<double> spec_optimal_omega;
    double spec_wmin = 0.0;
    std::optional<double> spec_wmax;
    int spec_points = 201;
    bool spec_mark = false;

    // stokes
    ModelOptions stokes_model;
    PointOptions stokes_point;
    std::vector<double> stokes_range;

    // simulate
    ModelOptions sim_model;
    PointOptions sim_point;
    int sim_mode = 1;
    std::optional<std::string> sim_beta, sim_psi;
    std::vector<double> sim_omegas{0.0, 0.5, 1.0, 2.0};
    SimConfig sim;
    std::string sim_dump;

    // figure
    ModelOptions fig_model;
    int fig_id = 0;
    std::optional<double> fig_eps;

    // replay
    std::string replay_manifest;

    int cmd_steady() {
        Config c = steady_model.resolve();
        RunManifest man(out_dir, "steady", "steady", argv);
        nlohmann::json cfg = config_to_json(c);
        cfg["resolved"] = model_json(c.model);
        std::vector<double> pumps;
        if (!steady_range.empty()) {
            if (steady_range.size() != 3 || !(steady_range[2] >= 1))
                throw InvalidParameter("--pump-range needs LO HI N");
            pumps = linspace(steady_range[0], steady_range[1], std::size_t(steady_range[2]));
            cfg["pump_range"] = steady_range;
        } else {
            pumps = {c.pump_E2};
        }
        man.set_config(cfg);
        Table t{"steady.csv", "vkerr.steady/1", steady_header(), {}};
        t.rows = rows_over(pumps, [&](double E2) {
            std::vector<std::vector<std::string>> rows;
            for (const auto& s : steady_states(E2, c.model.at_pump(E2))) rows.push_back(steady_row(E2, s));
            return rows;
        });
        write_table(man, t);
        man.write();
        return ok;
    }

    int cmd_bifurcations() {
        Config c = bif_model.resolve();
        RunManifest man(out_dir, "bifurcations", "bifurcations", argv);
        nlohmann::json cfg = config_to_json(c);
        cfg["resolved"] = model_json(c.model);
        if (!scan_delta.empty()) {
            if (scan_delta.size() != 3 || !(scan_delta[2] >= 2)) throw InvalidParameter("--scan-delta needs LO HI N");
            cfg["scan_delta"] = scan_delta;
            man.set_config(cfg);
            Table t{"bifurcations_scan.csv", "vkerr.fig1a/1", {"delta", "E2_down", "E2_up", "E2_pol"}, {}};
            t.rows = rows_over(linspace(scan_delta[0], scan_delta[1], std::size_t(scan_delta[2])), [&](double d) {
                ModelParams m = c.model;
                m.delta = d;
                auto b = bistability_range(m);
                auto p = bifurcations(m).polarization;
                std::vector<std::string> row{fmt(d), "", "", p ? fmt(p->E2_pol) : ""};
                if (b) {
                    row[1] = fmt(b->down_fold().E2);
                    row[2] = fmt(b->up_fold().E2);
                }
                return std::vector<std::vector<std::string>>{row};
            });
            write_table(man, t);
            man.write();
            return ok;
        }
        man.set_config(cfg);
        const auto set = bifurcations(c.model);
        nlohmann::json j;
        j["schema"] = "vkerr.bifurcations/1";
        j["delta"] = c.model.delta;
        if (set.bistable) {
            const auto& b = *set.bistable;
            j["bistable"] = {{"E2_minus", b.E2_minus},
                             {"E2_plus", b.E2_plus},
                             {"I_minus", b.I_minus},
                             {"I_plus", b.I_plus},
                             {"E2_up", b.up_fold().E2},
                             {"I_up", b.up_fold().I},
                             {"E2_down", b.down_fold().E2},
                             {"I_down", b.down_fold().I}};
        } else {
            j["bistable"] = nullptr;
        }
        if (set.polarization)
            j["polarization"] = {{"E2_pol", set.polarization->E2_pol}, {"I_pol", set.polarization->I_pol}};
        else
            j["polarization"] = nullptr;
        std::ofstream f(man.add_output("bifurcations.json", "vkerr.bifurcations/1"), std::ios::binary);
        f << j.dump(2) << '\n';
        f.close();
        man.write();
        return ok;
    }

    static double choose_beta(const SteadyState& s, const ModelParams& m, const std::optional<std::string>& beta,
                              const std::optional<std::string>& psi) {
        if (beta && psi) throw InvalidParameter("give either --beta or --psi, not both");
        if (psi) return beta_from_psi(parse_angle(*psi), s.phi1, m.eta);
        if (beta) return parse_angle(*beta);
        return s.phi1;
    }

    int cmd_spectrum() {
        Config c = spec_model.resolve();
        RunManifest man(out_dir, "spectrum", "spectrum", argv);
        nlohmann::json cfg = config_to_json(c);
        cfg["resolved"] = model_json(c.model);
        cfg["point"] = spec_point.json();
        cfg["mode"] = spec_mode;
        man.set_config(cfg);
        if (spec_mode != 1 && spec_mode != 2) throw InvalidParameter("--mode must be 1 or 2");
        auto [s, m] = spec_point.select(c.model, c.pump_E2);
        Linearization lin(s, m);
        double beta;
        if (spec_optimal) {
            if (spec_beta || spec_psi) throw InvalidParameter("--optimal excludes --beta/--psi");
            double w0 = spec_optimal_omega.value_or(lin.singular_at(0.0) ? 1e-4 : 0.0);
            beta = optimal_quadrature(lin, s, spec_mode, w0).beta;
        } else {
            beta = choose_beta(s, m, spec_beta, spec_psi);
        }
        const double psi = psi_from_beta(beta, s.phi1, m.eta);
        const double wmax = spec_wmax.value_or(default_omega_max(m));
        if (spec_points < 2 || !(wmax > spec_wmin) || spec_wmin < 0.0)
            throw InvalidParameter("frequency range needs 0 <= omega-min < omega-max and points >= 2");
        auto grid = linspace(spec_wmin, wmax, std::size_t(spec_points));
        if (grid.front() == 0.0 && lin.singular_at(0.0)) grid.front() = std::min(1e-4, 0.5 * grid[1]);
        Table t{"spectrum.csv", "vkerr.spectrum/1", {"omega", "q_normal", "q_symmetric", "beta", "psi"}, {}};
        for (double w : grid) {
            auto r = quad_spectrum(lin, spec_mode, beta, w);
            t.rows.push_back({fmt(w), fmt(r.normal_ordered), fmt(r.symmetric), fmt(beta), fmt(psi)});
        }
        if (spec_mark) {
            auto o = optimal_frequency(lin, spec_mode, beta, wmax);
            t.rows.push_back({fmt(o.omega), fmt(o.q_min), fmt(1.0 + o.q_min), fmt(beta), fmt(psi)});
        }
        write_table(man, t);
        man.write();
        return ok;
    }

    int cmd_stokes() {
        Config c = stokes_model.resolve();
        RunManifest man(out_dir, "stokes", "stokes", argv);
        nlohmann::json cfg = config_to_json(c);
        cfg["resolved"] = model_json(c.model);
        cfg["point"] = stokes_point.json();
        Table t{"stokes.csv",
                "vkerr.stokes/1",
                {"E2", "S0", "S1", "S2", "S3", "minV0", "minV1", "minV2", "minV3", "squeezed_param", "witness"},
                {}};
        auto push = [&](const PumpScanRow& r) {
            if (r.flagged) {
                t.rows.push_back({fmt(r.E2), "", "", "", "", "", "", "", "", "", "no_stable_state"});
                return;
            }
            t.rows.push_back({fmt(r.E2), fmt(r.means.s0), fmt(r.means.s1), fmt(r.means.s2), fmt(r.means.s3),
                              fmt(r.min_v[0]), fmt(r.min_v[1]), fmt(r.min_v[2]), fmt(r.min_v[3]),
                              r.verdict.squeezed_param ? std::to_string(*r.verdict.squeezed_param) : "",
                              witness_label(r.verdict)});
        };
        if (!stokes_point.at_bifurcation.empty() || stokes_point.state_index) {
            man.set_config(cfg);
            auto [s, m] = stokes_point.select(c.model, c.pump_E2);
            push(stokes_row(s, m));
        } else {
            std::vector<double> pumps;
            if (!stokes_range.empty()) {
                if (stokes_range.size() != 3 || !(stokes_range[2] >= 1))
                    throw InvalidParameter("--pump-range needs LO HI N");
                pumps = linspace(stokes_range[0], stokes_range[1], std::size_t(stokes_range[2]));
                cfg["pump_range"] = stokes_range;
            } else {
                pumps = {c.pump_E2};
            }
            man.set_config(cfg);
            for (const auto& r : pump_scan(c.model, pumps)) push(r);
        }
        write_table(man, t);
        man.write();
        return ok;
    }

    int cmd_simulate() {
        Config c = sim_model.resolve();
        RunManifest man(out_dir, "simulate", "simulate", argv);
        nlohmann::json cfg = config_to_json(c);
        cfg["resolved"] = model_json(c.model);
        cfg["point"] = sim_point.json();
        cfg["mode"] = sim_mode;
        cfg["sim"] = {{"dt", sim.dt},
                      {"duration", sim.duration},
                      {"n_traj", sim.n_traj},
                      {"burn_in", sim.burn_in},
                      {"sample_interval", sim.sample_interval},
                      {"segments_per_record", sim.segments_per_record}};
        man.set_config(cfg);
        man.set_seed(sim.seed);
        if (sim_mode != 1 && sim_mode != 2) throw InvalidParameter("--mode must be 1 or 2");
        sim.validate();
        auto [s, m] = sim_point.select(c.model, c.pump_E2);
        if (s.stable != Stability::Stable) throw UnstableState("simulation needs a stable operating point");
        const double beta = choose_beta(s, m, sim_beta, sim_psi);
        std::sort(sim_omegas.begin(), sim_omegas.end());
        FrequencyGrid grid(sim_omegas);
        Linearization lin(s, m);
        SpectralEstimate est;
        if (!sim_dump.empty()) {
            Ensemble ens = integrate_linearized(s, m, sim);
            write_trajectory_dump(man.add_output(sim_dump, "vkerr.trajectories/1"), ens, sim, model_json(m));
            man.add_output(sim_dump + ".json", "vkerr.trajectories-sidecar/1");
            est = estimate_spectral_matrix(ens, grid, sim.segments_per_record);
        } else {
            est = simulate_spectra(s, m, sim, grid);
        }
        Table t{"simulate.csv", "vkerr.simulate/1", {"omega", "q_analytic", "q_mc", "q_mc_stderr"}, {}};
        for (std::size_t k = 0; k < grid.size(); ++k) {
            double qa = lin.singular_at(grid[k]) ? std::nan("") : quad_spectrum(lin, sim_mode, beta, grid[k]).normal_ordered;
            auto e = est.quadrature(sim_mode, beta, k);
            t.rows.push_back({fmt(grid[k]), fmt(qa), fmt(e.value), fmt(e.error)});
        }
        write_table(man, t);
        man.write();
        return ok;
    }

    int cmd_figure() {
        Config c = fig_model.resolve();
        const std::string stem = "figure" + std::to_string(fig_id);
        if (fig_id < 1 || fig_id > 11) throw InvalidParameter("figure id must be in 1..11");
        RunManifest man(out_dir, stem, "figure", argv);
        nlohmann::json cfg = config_to_json(c);
        cfg["resolved"] = model_json(c.model);
        cfg["figure"] = fig_id;
        const double eps = fig_eps.value_or(default_figure_epsilon(fig_id));
        if (!(eps >= 0.0)) throw InvalidParameter("--epsilon must be non-negative");
        cfg["epsilon"] = eps;
        man.set_config(cfg);
        for (const auto& t : figure_tables(fig_id, c.model, eps)) write_table(man, t);
        man.write();
        return ok;
    }
};

int run(const std::vector<std::string>& args);

inline int run_replay(const std::string& manifest, const std::string& out_dir) {
    std::ifstream in(manifest);
    if (!in) throw InvalidParameter("cannot open manifest '" + manifest + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("malformed manifest: ") + e.what());
    }
    std::vector<std::string> args = j.at("command_line").get<std::vector<std::string>>();
    // Drop any previous output directory and point at the new one.
    std::vector<std::string> cleaned;
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--out-dir") {
            ++k;
            continue;
        }
        if (args[k].rfind("--out-dir=", 0) == 0) continue;
        cleaned.push_back(args[k]);
    }
    cleaned.insert(cleaned.begin() + 1, {"--out-dir", out_dir});
    return run(cleaned);
}

// args[0] is the program name.
inline int run(const std::vector<std::string>& args) {
    Runner r;
    r.argv = args;
    CLI::App app{"Steady states, bifurcations and quantum fluctuation spectra of a vectorial Kerr cavity"};
    app.require_subcommand(1);
    app.add_option("--out-dir", r.out_dir, "directory for CSV/JSON outputs and the run manifest");

    auto* st = app.add_subcommand("steady", "steady states at a pump or over a pump range");
    r.steady_model.attach(st);
    st->add_option("--pump-range", r.steady_range, "LO HI N")->expected(3);

    auto* bi = app.add_subcommand("bifurcations", "bistability and polarization thresholds");
    r.bif_model.attach(bi);
    bi->add_option("--scan-delta", r.scan_delta, "LO HI N: emit the bifurcation curves over detuning")->expected(3);

    auto* sp = app.add_subcommand("spectrum", "quadrature squeezing spectrum");
    r.spec_model.attach(sp);
    r.spec_point.attach(sp);
    sp->add_option("--mode", r.spec_mode, "1 (parallel) or 2 (orthogonal)");
    sp->add_option("--beta", r.spec_beta, "quadrature angle (number, pi, pi/2, ...)");
    sp->add_option("--psi", r.spec_psi, "angle relative to the mode-1 field, psi = 2 eta (beta - phi1)");
    sp->add_flag("--optimal", r.spec_optimal, "use the best quadrature at --optimal-omega");
    sp->add_option("--optimal-omega", r.spec_optimal_omega, "frequency for --optimal (default 0)");
    sp->add_option("--omega-min", r.spec_wmin);
    sp->add_option("--omega-max", r.spec_wmax);
    sp->add_option("--points", r.spec_points);
    sp->add_flag("--mark-optimum", r.spec_mark, "append a row at the optimal frequency");

    auto* sk = app.add_subcommand("stokes", "Stokes means, minimum variances and polarization squeezing");
    r.stokes_model.attach(sk);
    r.stokes_point.attach(sk);
    sk->add_option("--pump-range", r.stokes_range, "LO HI N")->expected(3);

    auto* sm = app.add_subcommand("simulate", "Monte Carlo estimate of a quadrature spectrum");
    r.sim_model.attach(sm);
    r.sim_point.attach(sm);
    sm->add_option("--mode", r.sim_mode);
    sm->add_option("--beta", r.sim_beta);
    sm->add_option("--psi", r.sim_psi);
    sm->add_option("--omegas", r.sim_omegas, "analysis frequencies");
    sm->add_option("--dt", r.sim.dt);
    sm->add_option("--duration", r.sim.duration);
    sm->add_option("--n-traj", r.sim.n_traj);
    sm->add_option("--seed", r.sim.seed);
    sm->add_option("--burn-in", r.sim.burn_in);
    sm->add_option("--sample-interval", r.sim.sample_interval);
    sm->add_option("--segments", r.sim.segments_per_record, "Welch segments per record");
    sm->add_option("--threads", r.sim.threads);
    sm->add_option("--dump", r.sim_dump, "raw trajectory file name (inside --out-dir)");

    auto* fg = app.add_subcommand("figure", "dataset behind a numbered figure");
    r.fig_model.attach(fg);
    fg->add_option("id", r.fig_id, "1..11")->required();
    fg->add_option("--epsilon", r.fig_eps,
                   "relative pump offset from bifurcations (default 0 for figures 4, 6, 8 and 1e-6 otherwise)");

    auto* rp = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    rp->add_option("manifest", r.replay_manifest)->required();

    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*st) return r.cmd_steady();
        if (*bi) return r.cmd_bifurcations();
        if (*sp) return r.cmd_spectrum();
        if (*sk) return r.cmd_stokes();
        if (*sm) return r.cmd_simulate();
        if (*fg) return r.cmd_figure();
        if (*rp) return run_replay(r.replay_manifest, r.out_dir);
    } catch (const InvalidParameter& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const NoThreshold& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const UnstableState& e) {
        std::cerr << "unstable operating point: " << e.what() << '\n';
        return unstable_point;
    } catch (const Divergence& e) {
        std::cerr << "simulation failure: " << e.what() << '\n';
        return simulation_failure;
    } catch (const InsufficientData& e) {
        std::cerr << "simulation failure: " << e.what() << '\n';
        return simulation_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
    return failure;
}

}  // namespace vkerr::cli
