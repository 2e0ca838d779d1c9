#pragma once

// Report serialization and scenario dispatch for the command-line tool.
//
// Layout under the output directory:
//   <scenario>/<table>.csv|jsonl   one series per file
//   report.json                    verdicts, digests, seeds (deterministic)
//   metadata.json                  config echo, versions, wall times, timestamp

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <yaml-cpp/yaml.h>

#include "dce/config.hpp"
#include "dce/scenarios.hpp"

namespace dce {

inline constexpr const char* kVersion = "0.1.0";

// 17 significant digits in scientific notation.
inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline void write_csv(const Table& t, std::ostream& os) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << t.columns[j];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << csv_number(row[j]);
        os << '\n';
    }
}

inline Json json_number(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

inline void write_jsonl(const Table& t, std::ostream& os) {
    for (const auto& row : t.rows) {
        Json line = Json::object();
        for (std::size_t j = 0; j < row.size(); ++j) line[t.columns[j]] = json_number(row[j]);
        os << line.dump() << '\n';
    }
}

inline Json report_json(const ScenarioReport& r) {
    Json j;
    j["scenario"] = r.scenario;
    j["digest"] = r.digest;
    j["seed"] = r.seed;
    j["passed"] = r.all_passed();
    j["verdicts"] = Json::array();
    for (const auto& v : r.verdicts)
        j["verdicts"].push_back({{"name", v.name},
                                 {"invariant", v.invariant},
                                 {"passed", v.passed},
                                 {"value", json_number(v.value)},
                                 {"relation", v.relation},
                                 {"threshold", json_number(v.threshold)}});
    j["tables"] = Json::array();
    for (const auto& t : r.tables) j["tables"].push_back(t.name);
    j["metadata"] = Json(r.metadata);
    return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << text;
}

// Writes series files plus report.json; returns the paths written.
inline std::vector<std::filesystem::path> write_reports(const std::vector<ScenarioReport>& reports,
                                                        const std::filesystem::path& dir, const std::string& format,
                                                        const Json& extra) {
    namespace fs = std::filesystem;
    std::vector<fs::path> written;
    Json all = extra;
    all["scenarios"] = Json::array();
    for (const auto& r : reports) {
        const fs::path sub = dir / r.scenario;
        fs::create_directories(sub);
        for (const auto& t : r.tables) {
            const fs::path p = sub / (t.name + (format == "jsonl" ? ".jsonl" : ".csv"));
            std::ofstream os(p, std::ios::binary);
            if (!os) throw std::runtime_error("cannot write " + p.string());
            if (format == "jsonl") write_jsonl(t, os);
            else write_csv(t, os);
            written.push_back(p);
        }
        all["scenarios"].push_back(report_json(r));
    }
    fs::create_directories(dir);
    write_text(dir / "report.json", all.dump(2) + "\n");
    written.push_back(dir / "report.json");
    return written;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

inline Json metadata_json(const RunConfig& c, const std::vector<ScenarioReport>& reports, double wall_seconds) {
    Json m;
    m["config_digest"] = c.digest();
    m["seed"] = c.seed;
    m["threads"] = resolve_threads(c.threads);
    m["versions"] = {{"dce_sim", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"compiler", __VERSION__}};
    m["timestamp"] = utc_timestamp();
    m["wall_seconds"] = wall_seconds;
    m["scenario_wall_seconds"] = Json::object();
    for (const auto& r : reports) m["scenario_wall_seconds"][r.scenario] = r.wall_seconds;
    m["config"] = c.echo;
    return m;
}

// One job per requested scenario; the run seed is shared.
inline std::vector<std::function<ScenarioReport()>> scenario_jobs(const RunConfig& c) {
    std::vector<std::function<ScenarioReport()>> jobs;
    for (const auto& name : c.scenarios) {
        if (name == "short-time-convergence") {
            jobs.emplace_back([&c] { return run_short_time_convergence(c.system, c.convergence, c.seed); });
        } else if (name == "rwa-check") {
            jobs.emplace_back([&c] {
                const auto rho = random_rho(c.system.bath.size(), c.rwa_strength, c.rwa_seed);
                return run_rwa_check(c.system.bath.omegas, rho, c.system.bath.temperature, c.rwa, c.system.omega0);
            });
        } else if (name == "mir-pulse-train") {
            jobs.emplace_back([&c] { return run_mir_pulse_train(c.mir); });
        } else if (name == "closure") {
            jobs.emplace_back(
                [&c] { return run_closure(c.system, c.closure, CentralGaussian::thermal(c.closure_initial_G)); });
        } else if (name == "propagate") {
            jobs.emplace_back([&c] { return run_propagate(c.system, c.propagate); });
        } else if (name == "langevin") {
            jobs.emplace_back([&c] { return run_langevin(c.langevin_model.model(), c.langevin, c.seed); });
        }
    }
    return jobs;
}

}  // namespace dce
