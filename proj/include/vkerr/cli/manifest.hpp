#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vkerr/errors.hpp"

#ifndef VKERR_VERSION
#define VKERR_VERSION "0.0.0"
#endif

namespace vkerr::cli {

inline std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct OutputFile {
    std::string name;    // relative to the output directory
    std::string schema;  // e.g. "vkerr.steady/1"
};

// Collects the outputs of one run and writes "<stem>.manifest.json" next to them.
class RunManifest {
public:
    RunManifest(std::filesystem::path out_dir, std::string stem, std::string command, std::vector<std::string> argv)
        : dir_(std::move(out_dir)), stem_(std::move(stem)), command_(std::move(command)), argv_(std::move(argv)),
          started_(utc_now()) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (!std::filesystem::is_directory(dir_)) throw InvalidParameter("cannot create output directory");
    }

    std::string path_for(const std::string& name) const { return (dir_ / name).string(); }

    std::string add_output(const std::string& name, const std::string& schema) {
        outputs_.push_back({name, schema});
        return path_for(name);
    }

    void set_config(nlohmann::json cfg) { config_ = std::move(cfg); }
    void set_seed(std::uint64_t seed) { seed_ = seed; }

    std::string manifest_name() const { return stem_ + ".manifest.json"; }

    void write() const {
        nlohmann::json j;
        j["schema"] = "vkerr.manifest/1";
        j["tool_version"] = VKERR_VERSION;
        j["command"] = command_;
        j["command_line"] = argv_;
        j["config"] = config_;
        j["seed"] = seed_ ? nlohmann::json(*seed_) : nlohmann::json(nullptr);
        j["started_utc"] = started_;
        j["finished_utc"] = utc_now();
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& o : outputs_) outs.push_back({{"path", o.name}, {"schema", o.schema}});
        j["outputs"] = outs;
        std::ofstream f(path_for(manifest_name()), std::ios::binary);
        if (!f) throw InvalidParameter("cannot write manifest");
        f << j.dump(2) << '\n';
    }

private:
    std::filesystem::path dir_;
    std::string stem_;
    std::string command_;
    std::vector<std::string> argv_;
    std::string started_;
    nlohmann::json config_ = nlohmann::json::object();
    std::optional<std::uint64_t> seed_;
    std::vector<OutputFile> outputs_;
};

}  // namespace vkerr::cli
