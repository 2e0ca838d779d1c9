#pragma once

// YAML run configuration. Every key read is echoed (with defaults filled in)
// into an ordered JSON tree that goes into the run metadata. Unknown keys are
// rejected, with a spelling suggestion when one is close.

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dce/langevin.hpp"
#include "dce/scenarios.hpp"

namespace dce {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& msg, int line = -1, int column = -1)
        : std::runtime_error(render(field, msg, line, column)), field_(field), line_(line), column_(column) {}
    const std::string& field() const noexcept { return field_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    static std::string render(const std::string& field, const std::string& msg, int line, int column) {
        std::string s;
        if (line >= 0) s += "line " + std::to_string(line) + ", column " + std::to_string(column) + ": ";
        if (!field.empty()) s += field + ": ";
        return s + msg;
    }
    std::string field_;
    int line_, column_;
};

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::optional<std::string> closest_key(const std::string& key, const std::vector<std::string>& known) {
    std::optional<std::string> best;
    std::size_t best_d = std::max<std::size_t>(2, key.size() / 3) + 1;
    for (const auto& k : known) {
        const auto d = edit_distance(key, k);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

// One mapping in the YAML tree. Reads record the key as known and echo the
// resolved value; finish() rejects whatever was not read.
class Section {
public:
    Section(YAML::Node node, std::string path, Json* echo) : node_(node), path_(std::move(path)), echo_(echo) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) fail_at(node_, "", "expected a mapping");
        *echo_ = Json::object();
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

    template <class T>
    T get(const std::string& key, const T& fallback) {
        known_.push_back(key);
        T value = fallback;
        if (has(key)) value = convert<T>(node_[key], key);
        (*echo_)[key] = value;
        return value;
    }

    double positive(const std::string& key, double fallback) {
        const double v = get(key, fallback);
        if (!(v > 0.0)) fail(key, "must be > 0");
        return v;
    }
    double nonnegative(const std::string& key, double fallback) {
        const double v = get(key, fallback);
        if (!(v >= 0.0)) fail(key, "must be >= 0");
        return v;
    }
    int count(const std::string& key, int fallback, int minimum = 1) {
        const int v = get(key, fallback);
        if (v < minimum) fail(key, "must be >= " + std::to_string(minimum));
        return v;
    }

    Section child(const std::string& key) {
        known_.push_back(key);
        return Section(has(key) ? node_[key] : YAML::Node(), field(key), &(*echo_)[key]);
    }

    void echo(const std::string& key, const Json& value) { (*echo_)[key] = value; }

    YAML::Node raw(const std::string& key) {
        known_.push_back(key);
        return has(key) ? node_[key] : YAML::Node();
    }

    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (std::find(known_.begin(), known_.end(), key) != known_.end()) continue;
            std::string msg = "unknown key \"" + key + "\"";
            if (const auto s = closest_key(key, known_)) msg += "; did you mean \"" + *s + "\"?";
            fail_at(kv.first, key, msg);
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        if (has(key)) fail_at(node_[key], key, msg);
        throw ConfigError(field(key), msg);
    }

    [[noreturn]] void fail_at(const YAML::Node& n, const std::string& key, const std::string& msg) const {
        const auto m = n.Mark();
        const std::string f = key.empty() ? path_ : field(key);
        if (m.line < 0) throw ConfigError(f, msg);
        throw ConfigError(f, msg, m.line + 1, m.column + 1);
    }

private:
    template <class T>
    T convert(const YAML::Node& n, const std::string& key) const {
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail_at(n, key, "cannot read value as " + type_name<T>());
        }
    }

    template <class T>
    static std::string type_name() {
        if constexpr (std::is_same_v<T, bool>) return "a boolean";
        else if constexpr (std::is_integral_v<T>) return "an integer";
        else if constexpr (std::is_floating_point_v<T>) return "a number";
        else if constexpr (std::is_same_v<T, std::string>) return "a string";
        else return "a list of numbers";
    }

    YAML::Node node_;
    std::string path_;
    Json* echo_;
    std::vector<std::string> known_;
};

// ------------------------------------------------------------------ profiles

// A profile is either a number (constant) or a mapping with a `kind`.
inline TimeProfile read_profile(Section& parent, const std::string& key, double constant_default) {
    const YAML::Node n = parent.raw(key);
    if (n && n.IsScalar()) {
        double v = 0.0;
        try {
            v = n.as<double>();
        } catch (const YAML::Exception&) {
            parent.fail(key, "expected a number or a profile mapping");
        }
        parent.echo(key, v);
        return TimeProfile::constant(v);
    }
    Section s = parent.child(key);
    const auto kind = s.get<std::string>("kind", "constant");
    TimeProfile out = TimeProfile::constant(constant_default);
    try {
        if (kind == "constant") {
            out = TimeProfile::constant(s.get("value", constant_default));
        } else if (kind == "gaussian-pulse") {
            out = TimeProfile::gaussian_pulse(s.get("amplitude", 1.0), s.get("center", 0.0), s.get("width", 1.0),
                                              s.get("baseline", 0.0));
        } else if (kind == "exp-rise-decay") {
            out = TimeProfile::exp_rise_decay(s.get("amplitude", 1.0), s.get("onset", 0.0), s.get("rise", 0.0),
                                              s.get("decay", 1.0), s.get("baseline", 0.0));
        } else if (kind == "piecewise-linear") {
            const auto flat = s.get<std::vector<double>>("points", {});
            if (flat.size() < 4 || flat.size() % 2 != 0)
                s.fail("points", "expects a flat list t0, v0, t1, v1, ... with at least two points");
            std::vector<std::pair<double, double>> pts;
            for (std::size_t i = 0; i < flat.size(); i += 2) pts.emplace_back(flat[i], flat[i + 1]);
            out = TimeProfile::piecewise_linear(pts, s.get("amplitude", 1.0), s.get("baseline", 0.0));
        } else if (kind == "pulse-train") {
            const TimeProfile base = read_profile(s, "pulse", 0.0);
            out = TimeProfile::pulse_train(base, s.positive("period", kPi), s.count("count", 1),
                                           s.get("start", 0.0));
        } else {
            s.fail("kind", "unknown profile kind \"" + kind +
                               "\" (constant, gaussian-pulse, exp-rise-decay, piecewise-linear, pulse-train)");
        }
    } catch (const DomainError& e) {
        throw ConfigError(parent.field(key), e.what());
    }
    s.finish();
    return out;
}

// ------------------------------------------------------------------- config

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"closure", "langevin", "mir-pulse-train", "propagate",
                                                "rwa-check", "short-time-convergence"};
    return names;
}

struct LangevinSection {
    TimeProfile omega = TimeProfile::constant(1.0);
    TimeProfile gamma = TimeProfile::constant(0.1);
    double omega0 = 1.0;
    double y = 0.0;
    double G = 1.0;

    LangevinModel model() const { return LangevinModel(omega, asymmetric_noise_set(gamma, y, omega0, G)); }
};

struct RunConfig {
    std::vector<std::string> scenarios;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string output_dir;
    std::string format = "csv";

    SystemSpec system;
    CentralGaussian initial = CentralGaussian::vacuum();
    PropagateOptions propagate_options;
    PropagateDumpParams propagate;
    ConvergenceParams convergence;
    RwaParams rwa;
    double rwa_strength = 0.05;
    std::uint64_t rwa_seed = 11;
    MirParams mir;
    ClosureParams closure;
    double closure_initial_G = 2.0;
    LangevinSection langevin_model;
    LangevinDumpParams langevin;

    Json echo;

    // Hash of everything that can change results; worker count and output
    // location are left out.
    std::string digest() const {
        Json j = echo;
        j.erase("threads");
        j.erase("output");
        return Digest().add(j.dump()).hex();
    }
};

namespace detail {

inline CentralGaussian read_state(Section s) {
    const auto kind = s.get<std::string>("kind", "vacuum");
    CentralGaussian out = CentralGaussian::vacuum();
    if (kind == "vacuum") {
    } else if (kind == "thermal") {
        const double G = s.get("G", 1.0);
        if (G < 1.0) s.fail("G", "must be >= 1");
        out = CentralGaussian::thermal(G);
    } else if (kind == "coherent") {
        out = CentralGaussian::coherent(s.get("p", 0.0), s.get("x", 0.0));
    } else {
        s.fail("kind", "unknown state kind \"" + kind + "\" (vacuum, thermal, coherent)");
    }
    s.finish();
    return out;
}

inline void read_system(Section s, RunConfig& c) {
    c.system.omega0 = s.positive("omega0", 1.0);
    c.system.omega = read_profile(s, "omega", c.system.omega0);
    c.system.t_max = s.positive("t_max", 20.0);

    Section b = s.child("bath");
    VecX omegas;
    const auto explicit_freq = b.get<std::vector<double>>("frequencies", {});
    if (!explicit_freq.empty()) {
        omegas = Eigen::Map<const VecX>(explicit_freq.data(), static_cast<Eigen::Index>(explicit_freq.size()));
        for (double w : explicit_freq)
            if (!(w > 0.0)) b.fail("frequencies", "every frequency must be > 0");
    } else {
        const int n = b.count("modes", 16);
        const double lo = b.positive("omega_min", 0.2);
        const double hi = b.positive("omega_max", 3.0);
        if (!(hi >= lo)) b.fail("omega_max", "must be >= omega_min");
        omegas = uniform_frequencies(n, lo, hi);
    }
    const int n = static_cast<int>(omegas.size());

    Section cp = b.child("coupling");
    const auto kind = cp.get<std::string>("kind", "random");
    CouplingConstants k;
    if (kind == "random") {
        k = random_couplings(n, cp.nonnegative("scale", 0.05), cp.get<std::uint64_t>("seed", 7));
    } else if (kind == "rwa") {
        k = rwa_couplings(random_rho(n, cp.nonnegative("strength", 0.05), cp.get<std::uint64_t>("seed", 11)),
                          c.system.omega0, omegas);
    } else if (kind == "explicit") {
        auto vec = [&](const char* key) {
            const auto v = cp.get<std::vector<double>>(key, std::vector<double>(static_cast<std::size_t>(n), 0.0));
            if (static_cast<int>(v.size()) != n) cp.fail(key, "must have one entry per bath mode");
            return VecX(Eigen::Map<const VecX>(v.data(), n));
        };
        k.U = vec("U");
        k.V = vec("V");
        k.G = vec("G");
        k.Z = vec("Z");
    } else {
        cp.fail("kind", "unknown coupling kind \"" + kind + "\" (random, rwa, explicit)");
    }
    cp.finish();

    c.system.bath = bath_with(omegas, k);
    c.system.bath.nu = read_profile(b, "nu", 1.0);
    c.system.bath.temperature = b.nonnegative("temperature", 0.0);
    b.finish();
    try {
        c.system.validate();
    } catch (const DomainError& e) {
        const std::string m = e.what();
        const char* key = m.rfind("omega0", 0) == 0 ? "omega0" : m.rfind("omega", 0) == 0 ? "omega"
                                                                : m.rfind("t_max", 0) == 0 ? "t_max"
                                                                                          : "bath";
        throw ConfigError(s.field(key), m);
    }
    s.finish();
}

}  // namespace detail

inline RunConfig parse_config_node(const YAML::Node& root) {
    RunConfig c;
    Section top(root, "", &c.echo);

    const YAML::Node sn = top.raw("scenario");
    if (!top.has("scenario")) throw ConfigError("scenario", "missing required key");
    std::vector<std::string> names;
    try {
        if (sn.IsSequence()) names = sn.as<std::vector<std::string>>();
        else names.push_back(sn.as<std::string>());
    } catch (const YAML::Exception&) {
        top.fail("scenario", "expected a scenario name or a list of names");
    }
    for (const auto& n : names) {
        const auto& all = scenario_names();
        if (std::find(all.begin(), all.end(), n) != all.end()) continue;
        std::string msg = "unknown scenario \"" + n + "\"";
        if (const auto s = closest_key(n, all)) msg += "; did you mean \"" + *s + "\"?";
        top.fail("scenario", msg);
    }
    if (names.empty()) top.fail("scenario", "list is empty");
    c.scenarios = names;
    c.echo["scenario"] = names;

    c.seed = top.get<std::uint64_t>("seed", 1);
    c.threads = top.count("threads", 0, 0);
    {
        Section o = top.child("output");
        c.output_dir = o.get<std::string>("dir", "");
        c.format = o.get<std::string>("format", "csv");
        if (c.format != "csv" && c.format != "jsonl") o.fail("format", "must be csv or jsonl");
        o.finish();
    }

    detail::read_system(top.child("system"), c);
    c.initial = detail::read_state(top.child("initial_state"));

    {
        Section s = top.child("propagate");
        c.propagate.steps = s.count("steps", 200);
        c.propagate.full_R = s.get("full_R", false);
        c.propagate.defect_tol = s.positive("defect_tol", 1e-8);
        c.propagate_options.max_step = s.nonnegative("max_step", 0.0);
        c.propagate_options.defect_limit = s.positive("defect_limit", 1e-6);
        s.finish();
        c.propagate.state0 = c.initial;
        c.propagate.options = c.propagate_options;
    }
    {
        Section s = top.child("convergence");
        auto& p = c.convergence;
        p.ladder = s.get("ladder", p.ladder);
        if (p.ladder.size() < 2) s.fail("ladder", "needs at least two entries");
        for (std::size_t i = 0; i < p.ladder.size(); ++i)
            if (!(p.ladder[i] > 0.0) || (i > 0 && !(p.ladder[i] < p.ladder[i - 1])))
                s.fail("ladder", "must be positive and strictly descending");
        p.window = s.positive("window", p.window);
        p.samples = s.count("samples", p.samples, 2);
        p.reference_eps = s.positive("reference_eps", p.reference_eps);
        p.mu_rel_tol = s.positive("mu_rel_tol", p.mu_rel_tol);
        p.order_min = s.get("order_min", p.order_min);
        p.identity_tol = s.positive("identity_tol", p.identity_tol);
        p.control_min = s.positive("control_min", p.control_min);
        s.finish();
    }
    {
        Section s = top.child("rwa");
        auto& p = c.rwa;
        c.rwa_strength = s.positive("strength", c.rwa_strength);
        c.rwa_seed = s.get<std::uint64_t>("coupling_seed", c.rwa_seed);
        p.eps = s.positive("eps", p.eps);
        p.window = s.positive("window", p.window);
        p.samples = s.count("samples", p.samples, 2);
        p.d12_tol = s.positive("d12_tol", p.d12_tol);
        p.exact_tol = s.positive("exact_tol", p.exact_tol);
        p.bridge_nu = s.positive("bridge_nu", p.bridge_nu);
        p.bridge_t_max = s.positive("bridge_t_max", p.bridge_t_max);
        p.bridge_from = s.nonnegative("bridge_from", p.bridge_from);
        if (!(p.bridge_from < p.bridge_t_max)) s.fail("bridge_from", "must be < bridge_t_max");
        p.bridge_samples = s.count("bridge_samples", p.bridge_samples, 2);
        p.ratio_tol = s.positive("ratio_tol", p.ratio_tol);
        s.finish();
    }
    {
        Section s = top.child("mir");
        auto& p = c.mir;
        p.field_period_ps = s.positive("field_period_ps", p.field_period_ps);
        p.recombination_ps = s.positive("recombination_ps", p.recombination_ps);
        p.rise_ps = s.nonnegative("rise_ps", p.rise_ps);
        p.depth = s.nonnegative("depth", p.depth);
        if (!(p.depth < 1.0)) s.fail("depth", "must be < 1");
        p.gamma_ratio = s.nonnegative("gamma_ratio", p.gamma_ratio);
        p.pulses = s.count("pulses", p.pulses);
        p.spacing = s.positive("spacing", p.spacing);
        p.y = s.get("y", p.y);
        for (double y : p.y)
            if (!(y >= -1.0 && y <= 1.0)) s.fail("y", "every entry must lie in [-1, 1]");
        if (p.y.empty()) s.fail("y", "needs at least one entry");
        p.G = s.get("G", p.G);
        if (!(p.G >= 1.0)) s.fail("G", "must be >= 1");
        p.samples_per_pulse = s.count("samples_per_pulse", p.samples_per_pulse);
        p.step_factor = s.positive("step_factor", p.step_factor);
        p.separation_factor = s.positive("separation_factor", p.separation_factor);
        p.conservation_tol = s.positive("conservation_tol", p.conservation_tol);
        s.finish();
    }
    {
        Section s = top.child("closure");
        auto& p = c.closure;
        p.t_max = s.positive("t_max", p.t_max);
        p.step = s.positive("step", p.step);
        p.rel_tol = s.positive("rel_tol", p.rel_tol);
        p.scale_ratio_min = s.positive("scale_ratio_min", p.scale_ratio_min);
        p.scale_ratio_max = s.positive("scale_ratio_max", p.scale_ratio_max);
        p.scales = s.get("scales", p.scales);
        if (p.scales.empty()) s.fail("scales", "needs at least one entry");
        c.closure_initial_G = s.get("initial_G", c.closure_initial_G);
        if (!(c.closure_initial_G >= 1.0)) s.fail("initial_G", "must be >= 1");
        s.finish();
    }
    {
        Section s = top.child("langevin");
        auto& m = c.langevin_model;
        m.omega0 = s.positive("omega0", 1.0);
        m.omega = read_profile(s, "omega", m.omega0);
        m.gamma = read_profile(s, "gamma", 0.1);
        m.y = s.get("y", 0.0);
        if (!(m.y >= -1.0 && m.y <= 1.0)) s.fail("y", "must lie in [-1, 1]");
        m.G = s.get("G", 1.0);
        if (!(m.G >= 1.0)) s.fail("G", "must be >= 1");
        auto& p = c.langevin;
        p.t_max = s.positive("t_max", p.t_max);
        p.steps = s.count("steps", p.steps);
        p.trajectories = static_cast<std::size_t>(s.count("trajectories", 0, 0));
        p.max_step = s.nonnegative("max_step", 0.0);
        s.finish();
        p.threads = c.threads;
        p.state0 = c.initial;
        try {
            (void)m.model();
        } catch (const DomainError& e) {
            throw ConfigError(s.field("gamma"), e.what());
        }
    }
    top.finish();
    c.convergence.threads = c.threads;
    return c;
}

inline RunConfig parse_config_text(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    if (!root || root.IsNull()) throw ConfigError("", "empty configuration");
    if (!root.IsMap()) throw ConfigError("", "top level must be a mapping");
    return parse_config_node(root);
}

inline RunConfig parse_config(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ConfigError("", "cannot open " + path);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("", e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    if (!root || root.IsNull()) throw ConfigError("", "empty configuration");
    if (!root.IsMap()) throw ConfigError("", "top level must be a mapping");
    return parse_config_node(root);
}

}  // namespace dce
