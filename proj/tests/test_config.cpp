#include "doctest.h"

#include "prl/config.hpp"
#include "prl/errors.hpp"

#include <sstream>

using namespace prl;

namespace {

KeyValueFile parse(const std::string& text) {
    std::istringstream in(text);
    return parse_key_value(in, "test");
}

}  // namespace

TEST_CASE("key-value parsing") {
    const KeyValueFile f = parse("# comment\n[grid]\nNs = [20, 100]  # trailing\nname = \"a#b\"\n\n");
    REQUIRE(f.entries.size() == 2);
    CHECK(f.entries[0].first == "Ns");
    CHECK(f.entries[0].second == "[20, 100]");
    CHECK(f.entries[1].second == "\"a#b\"");
    CHECK_THROWS_AS(parse("no equals sign\n"), DataError);
    CHECK_THROWS_AS(parse("L = 5\nL = 6\n"), ConfigError);
}

TEST_CASE("list splitting") {
    CHECK(split_list("[a, b , c]") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_list("[\"x\", 'y']") == std::vector<std::string>{"x", "y"});
    CHECK(split_list("7") == std::vector<std::string>{"7"});
}

TEST_CASE("settings apply to the config") {
    ExperimentConfig c;
    apply_setting(c, "Ns", "[20, 100, 300]");
    apply_setting(c, "cs", "[1, 1.6]");
    apply_setting(c, "estimators", "[sample, poet]");
    apply_setting(c, "paper_z", "true");
    apply_setting(c, "poet_rule", "hard");
    apply_setting(c, "sd_max", "0.03");
    CHECK(c.Ns == std::vector<Eigen::Index>{20, 100, 300});
    CHECK(c.cs == std::vector<double>{1.0, 1.6});
    CHECK(c.estimators == std::vector<EstimatorKind>{EstimatorKind::sample, EstimatorKind::poet});
    CHECK(c.paper_z);
    CHECK(c.poet_rule.kind == ThresholdRule::Kind::hard);
    CHECK(c.calibration.sd_max == 0.03);
}

TEST_CASE("bad settings name their key") {
    ExperimentConfig c;
    try {
        apply_setting(c, "estimators", "[sample, ledoit]");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "estimators");
        CHECK(std::string(e.what()).find("ledoit") != std::string::npos);
    }
    CHECK_THROWS_AS(apply_setting(c, "bogus", "1"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "L", "five"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "cs", "[0.5]"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "paper_z", "maybe"), ConfigError);
}

TEST_CASE("validation errors become key errors") {
    try {
        (void)experiment_config_from(parse("tau = 1.5\n"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "tau");
    }
}

TEST_CASE("canonical string and hash are stable") {
    const ExperimentConfig a = experiment_config_from(parse("Ns = [20]\nreplications = 3\n"));
    const ExperimentConfig b = experiment_config_from(parse("replications = 3\nNs = [20]\n"));
    CHECK(canonical_string(a) == canonical_string(b));
    CHECK(fnv1a64(canonical_string(a)) == fnv1a64(canonical_string(b)));
    CHECK(canonical_string(a) != canonical_string(ExperimentConfig{}));
    // Canonical output parses back to the same settings.
    CHECK(canonical_string(experiment_config_from(parse(canonical_string(a)))) ==
          canonical_string(a));
}

TEST_CASE("hash helpers") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
    CHECK(provenance_line(7, 0xabcULL) == "prl 0.1.0 seed=7 config_hash=0000000000000abc");
}
