#include <catch_amalgamated.hpp>

#include "dce/config.hpp"

using namespace dce;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("minimal config fills defaults", "[config]") {
    const auto c = parse_config_text("scenario: mir-pulse-train\n");
    CHECK(c.scenarios == std::vector<std::string>{"mir-pulse-train"});
    CHECK(c.seed == 1);
    CHECK(c.format == "csv");
    CHECK(c.system.bath.size() == 16);
    CHECK(c.mir.pulses == 50);
    CHECK(c.mir.y == std::vector<double>{0.0, 0.5});
    // defaults are echoed
    CHECK(c.echo["mir"]["recombination_ps"] == 30.0);
    CHECK(c.echo["system"]["bath"]["modes"] == 16);
    CHECK(c.echo["system"]["bath"]["coupling"]["kind"] == "random");
}

TEST_CASE("unknown keys are rejected with a suggestion", "[config]") {
    const auto e = error_of("scenario: langevin\nlangevin:\n  gamm: 0.1\n");
    CHECK_THAT(e, ContainsSubstring("unknown key \"gamm\""));
    CHECK_THAT(e, ContainsSubstring("did you mean \"gamma\""));
    CHECK_THAT(e, ContainsSubstring("line 3, column 3"));
    CHECK_THAT(error_of("scenario: closure\nsed: 3\n"), ContainsSubstring("did you mean \"seed\""));
    CHECK_THAT(error_of("scenario: closure\nzzzzzz: 3\n"), !ContainsSubstring("did you mean"));
}

TEST_CASE("validation errors name the field", "[config]") {
    try {
        parse_config_text("scenario: propagate\nsystem:\n  omega0: -1\n");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "system.omega0");
        CHECK(e.line() == 3);
        CHECK(e.column() == 11);
    }
    CHECK_THAT(error_of("scenario: propagate\nsystem:\n  omega: 2.0\n"), ContainsSubstring("system.omega:"));
    CHECK_THAT(error_of("scenario: mir-pulse-train\nmir:\n  y: [0, 2]\n"), ContainsSubstring("mir.y"));
    CHECK_THAT(error_of("scenario: langevin\nlangevin:\n  G: 0.5\n"), ContainsSubstring("langevin.G"));
    CHECK_THAT(error_of("scenario: propagate\nsystem:\n  bath: {modes: 0}\n"),
               ContainsSubstring("system.bath.modes"));
    CHECK_THAT(error_of("scenario: propagate\nseed: abc\n"), ContainsSubstring("an integer"));
}

TEST_CASE("scenario names are checked", "[config]") {
    CHECK_THAT(error_of("scenario: clousre\n"), ContainsSubstring("did you mean \"closure\""));
    CHECK_THAT(error_of("seed: 1\n"), ContainsSubstring("scenario: missing"));
    const auto c = parse_config_text("scenario: [closure, rwa-check]\n");
    CHECK(c.scenarios.size() == 2);
}

TEST_CASE("malformed YAML reports the position", "[config]") {
    CHECK_THAT(error_of("scenario: propagate\nsystem: [1, 2\n"), ContainsSubstring("line 3"));
    CHECK_THAT(error_of(""), ContainsSubstring("empty"));
    CHECK_THAT(error_of("- a\n- b\n"), ContainsSubstring("mapping"));
}

TEST_CASE("profiles are read from numbers or mappings", "[config]") {
    const auto c = parse_config_text(R"(
scenario: propagate
system:
  omega: {kind: exp-rise-decay, amplitude: -0.01, onset: 2, rise: 0.1, decay: 0.5, baseline: 1}
  bath:
    nu: {kind: pulse-train, period: 3.0, count: 4, pulse: {kind: gaussian-pulse, center: 1, width: 0.2}}
)");
    CHECK(c.system.omega(0.0) == 1.0);
    CHECK(c.system.omega.kind() == ProfileKind::exp_rise_decay_pulse);
    CHECK(c.system.bath.nu.kind() == ProfileKind::pulse_train);
    CHECK(c.system.bath.nu(4.0) == c.system.bath.nu(1.0));
    CHECK(c.echo["system"]["bath"]["nu"]["pulse"]["width"] == 0.2);
    CHECK_THAT(error_of("scenario: propagate\nsystem:\n  bath:\n    nu: {kind: wave}\n"),
               ContainsSubstring("unknown profile kind"));
    CHECK_THAT(error_of("scenario: propagate\nsystem:\n  bath:\n    nu: {kind: gaussian-pulse, widht: 1}\n"),
               ContainsSubstring("did you mean \"width\""));
}

TEST_CASE("explicit couplings must match the bath size", "[config]") {
    const auto c = parse_config_text(R"(
scenario: propagate
system:
  bath:
    frequencies: [1.0, 2.0]
    coupling: {kind: explicit, U: [0.1, 0.2], V: [0, 0], G: [0, 0], Z: [0.3, 0]}
)");
    CHECK(c.system.bath.size() == 2);
    CHECK(c.system.bath.Z[0] == 0.3);
    CHECK_THAT(error_of("scenario: propagate\nsystem:\n  bath:\n    frequencies: [1.0]\n"
                        "    coupling: {kind: explicit, U: [1, 2]}\n"),
               ContainsSubstring("system.bath.coupling.U"));
}

TEST_CASE("digest ignores threads and output location", "[config]") {
    const auto a = parse_config_text("scenario: closure\nthreads: 1\n");
    const auto b = parse_config_text("scenario: closure\nthreads: 8\noutput: {dir: /tmp/x}\n");
    const auto c = parse_config_text("scenario: closure\nseed: 2\n");
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != c.digest());
}

TEST_CASE("edit distance", "[config]") {
    CHECK(edit_distance("gamm", "gamma") == 1);
    CHECK(edit_distance("kitten", "sitting") == 3);
    CHECK(edit_distance("", "abc") == 3);
    CHECK(closest_key("omgea0", {"omega0", "omega", "t_max"}) == std::optional<std::string>("omega0"));
}
