// dce_sim: run configured scenarios and write series, report and metadata.
//
// Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 usage or
// configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "dce/config.hpp"
#include "dce/io.hpp"

namespace {

enum Exit { kPass = 0, kVerdictFailure = 1, kUsage = 2, kNumerical = 3 };

std::filesystem::path output_dir(const std::string& flag, const dce::RunConfig& c) {
    if (!flag.empty()) return flag;
    if (!c.output_dir.empty()) return c.output_dir;
    if (const char* env = std::getenv("DCE_SIM_OUT"); env && *env) return env;
    return "dce_out";
}

int run(const std::string& path, const std::string& out_flag, const std::optional<std::uint64_t>& seed,
        const std::string& format_flag, std::optional<int> threads, bool check_only) {
    dce::RunConfig cfg;
    try {
        cfg = dce::parse_config(path);
    } catch (const dce::ConfigError& e) {
        std::cerr << "config error: " << path << ": " << e.what() << "\n";
        return kUsage;
    }
    if (seed) {
        cfg.seed = *seed;
        cfg.echo["seed"] = *seed;
    }
    if (threads) {
        cfg.threads = *threads;
        cfg.convergence.threads = *threads;
        cfg.langevin.threads = *threads;
        cfg.echo["threads"] = *threads;
    }
    if (!format_flag.empty()) {
        cfg.format = format_flag;
        cfg.echo["output"]["format"] = format_flag;
    }
    if (check_only) {
        std::cout << "config ok: " << path << " (digest " << cfg.digest() << ")\n";
        return kPass;
    }

    const auto dir = output_dir(out_flag, cfg);
    const dce::Stopwatch clock;
    std::vector<dce::ScenarioReport> reports;
    try {
        reports = dce::run_sweep(dce::scenario_jobs(cfg), cfg.threads);
    } catch (const dce::IntegrationError& e) {
        std::filesystem::create_directories(dir);
        dce::Json j;
        j["status"] = "numerical-failure";
        j["config_digest"] = cfg.digest();
        j["seed"] = cfg.seed;
        j["failure_time"] = e.time();
        j["message"] = e.what();
        dce::write_text(dir / "report.json", j.dump(2) + "\n");
        std::cerr << "numerical failure at t = " << e.time() << ": " << e.what() << "\n";
        return kNumerical;
    } catch (const dce::DomainError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kUsage;
    }
    for (auto& r : reports) r.seed = cfg.seed;

    dce::Json extra;
    extra["status"] = "completed";
    extra["config_digest"] = cfg.digest();
    extra["seed"] = cfg.seed;
    bool ok = true;
    for (const auto& r : reports) ok = ok && r.all_passed();
    extra["passed"] = ok;
    try {
        dce::write_reports(reports, dir, cfg.format, extra);
        dce::write_text(dir / "metadata.json", dce::metadata_json(cfg, reports, clock.seconds()).dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "output error: " << e.what() << "\n";
        return kUsage;
    }

    for (const auto& r : reports) {
        std::cout << r.scenario << " (" << r.wall_seconds << " s)\n";
        for (const auto& v : r.verdicts)
            std::cout << "  " << (v.passed ? "pass" : "FAIL") << "  " << v.name << ": " << v.value << " "
                      << v.relation << " " << v.threshold << "\n";
    }
    std::cout << "wrote " << dir.string() << "\n";
    return ok ? kPass : kVerdictFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open-system oscillator simulations"};
    app.require_subcommand(0, 1);
    bool list = false;
    app.add_flag("--list-scenarios", list, "Print the available scenario names");

    auto* run_cmd = app.add_subcommand("run", "Run the scenarios named in a config file");
    std::string config, out, format;
    std::uint64_t seed_value = 0;
    int threads_value = 0;
    bool check = false;
    run_cmd->add_option("config", config, "YAML configuration")->required();
    run_cmd->add_option("--out", out, "Output directory (default: $DCE_SIM_OUT, then ./dce_out)");
    auto* seed_opt = run_cmd->add_option("--seed", seed_value, "Run seed");
    run_cmd->add_option("--format", format, "Series format")->check(CLI::IsMember({"csv", "jsonl"}));
    auto* threads_opt = run_cmd->add_option("--threads", threads_value, "Worker cap (0: hardware)")
                            ->check(CLI::NonNegativeNumber);
    run_cmd->add_flag("--check", check, "Validate the config and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    if (list) {
        for (const auto& n : dce::scenario_names()) std::cout << n << "\n";
        return kPass;
    }
    if (!*run_cmd) {
        std::cerr << app.help();
        return kUsage;
    }
    std::optional<std::uint64_t> seed;
    if (*seed_opt) seed = seed_value;
    std::optional<int> threads;
    if (*threads_opt) threads = threads_value;
    return run(config, out, seed, format, threads, check);
}
