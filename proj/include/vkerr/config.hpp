#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "vkerr/params.hpp"

namespace vkerr {

// Key-value configuration: delta, eta, a_mt, b_mt, pump_E2 and an optional
// "physical" block {gamma, g, omega_c, omega_0, E0} that replaces delta/pump.
struct Config {
    ModelParams model;
    std::optional<PhysicalParams> physical;
    double pump_E2 = 0.0;  // as given, so E^2 survives without a sqrt round trip
};

namespace detail {

inline double number_at(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) throw InvalidParameter(std::string("config key '") + key + "' must be a number");
    return v.get<double>();
}

inline int eta_at(const nlohmann::json& j, int fallback) {
    if (!j.contains("eta")) return fallback;
    const auto& v = j.at("eta");
    if (!v.is_number_integer()) throw InvalidParameter("config key 'eta' must be +1 or -1");
    int e = v.get<int>();
    if (e != 1 && e != -1) throw InvalidParameter("config key 'eta' must be +1 or -1");
    return e;
}

}  // namespace detail

inline Config config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidParameter("config must be a JSON object");
    static const char* known[] = {"delta", "eta", "a_mt", "b_mt", "pump_E2", "physical"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw InvalidParameter("unknown config key '" + it.key() + "'");
    }
    Config c;
    ModelParams& m = c.model;
    m.eta = detail::eta_at(j, 1);
    m.A_mt = detail::number_at(j, "a_mt", liquid_A);
    m.B_mt = detail::number_at(j, "b_mt", liquid_B);
    if (j.contains("physical")) {
        if (j.contains("delta") || j.contains("pump_E2"))
            throw InvalidParameter("'physical' block conflicts with delta/pump_E2");
        const auto& pj = j.at("physical");
        if (!pj.is_object()) throw InvalidParameter("'physical' must be an object");
        PhysicalParams p;
        p.gamma = detail::number_at(pj, "gamma", 1.0);
        p.g = detail::number_at(pj, "g", 1.0);
        p.omega_c = detail::number_at(pj, "omega_c", 0.0);
        p.omega_0 = detail::number_at(pj, "omega_0", 0.0);
        p.E0 = detail::number_at(pj, "E0", 0.0);
        p.eta = m.eta;
        p.A_mt = m.A_mt;
        p.B_mt = m.B_mt;
        m = normalize(p);
        c.physical = p;
        c.pump_E2 = m.E2();
    } else {
        m.delta = detail::number_at(j, "delta", 0.0);
        double E2 = detail::number_at(j, "pump_E2", 0.0);
        if (!(E2 >= 0.0)) throw InvalidParameter("pump_E2 must be non-negative");
        m.E = std::sqrt(E2);
        c.pump_E2 = E2;
    }
    m.validate();
    return c;
}

inline nlohmann::json config_to_json(const Config& c) {
    nlohmann::json j;
    j["eta"] = c.model.eta;
    j["a_mt"] = c.model.A_mt;
    j["b_mt"] = c.model.B_mt;
    if (c.physical) {
        const auto& p = *c.physical;
        j["physical"] = {{"gamma", p.gamma}, {"g", p.g}, {"omega_c", p.omega_c},
                         {"omega_0", p.omega_0}, {"E0", p.E0}};
    } else {
        j["delta"] = c.model.delta;
        j["pump_E2"] = c.pump_E2;
    }
    return j;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("malformed config: ") + e.what());
    }
    return config_from_json(j);
}

}  // namespace vkerr
