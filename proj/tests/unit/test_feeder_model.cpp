#include <doctest.h>

#include <cmath>

#include "mgrestore/feeder_model.hpp"
#include "support/fixtures.hpp"

using namespace mgrestore;
using testing_support::fixture;

namespace {

const char* kSmall = R"({
  "name": "two-node",
  "base": {"mva_per_phase": 1.0, "kv_ln": 2.4},
  "nodes": [{"id": "a", "phases": "abc", "base_kv": 2.4}, {"id": "b", "phases": "ab", "base_kv": 2.4}],
  "branches": [{"id": "ab", "from": "a", "to": "b", "phases": "ab",
                "impedance_ohm": {"re": [[0.3, 0.1, 0], [0.1, 0.3, 0], [0, 0, 0]],
                                  "im": [[0.6, 0.2, 0], [0.2, 0.6, 0], [0, 0, 0]]},
                "ampacity_a": 200}],
  "ders": [{"id": "g", "node": "a", "kind": "droop", "black_start": true, "phases": "abc",
            "p_min_kw": 0, "p_max_kw": 300, "q_min_kvar": -50, "q_max_kvar": 150, "ramp_fraction": 0.5}],
  "loads": [{"id": "l", "node": "b", "phases": "ab", "p_kw": {"a": 20, "b": 30}, "q_kvar": {"a": 5, "b": 6},
             "zip": [0.2, 0.3, 0.5]}]
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

std::string rule_of(const std::string& text) {
  try {
    parse_feeder(text);
  } catch (const FeederError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("small feeder parses with defaults") {
  FeederModel f = parse_feeder(kSmall);
  CHECK(f.name == "two-node");
  CHECK(f.nodes.size() == 2);
  CHECK(f.nodes[1].phases.to_string() == "ab");
  CHECK(f.branches[0].impedance(0, 1) == std::complex<double>(0.1, 0.2));
  CHECK_FALSE(f.branches[0].switchable);
  CHECK(f.ders[0].kind == DerKind::Droop);
  CHECK(f.loads[0].switchable);
  CHECK_FALSE(f.loads[0].controllable_dr);
  CHECK(f.loads[0].p[1] == doctest::Approx(30));
  CHECK(f.step_interval == 1.0);
  CHECK(validate(f).ok());
}

TEST_CASE("serialization round-trips") {
  FeederModel f = parse_feeder(kSmall);
  FeederModel g = parse_feeder(serialize_feeder(f));
  CHECK(serialize_feeder(g) == serialize_feeder(f));
  FeederModel big = load_feeder_file(fixture("ieee123_base.json"));
  CHECK(serialize_feeder(parse_feeder(serialize_feeder(big))) == serialize_feeder(big));
}

TEST_CASE("validation names the broken rule") {
  CHECK(rule_of(replace(kSmall, R"("to": "b")", R"("to": "zz")")).find("dangling-reference") != std::string::npos);
  CHECK(rule_of(replace(kSmall, R"("zip": [0.2, 0.3, 0.5])", R"("zip": [0.2, 0.3, 0.6])")).find("zip-sum") !=
        std::string::npos);
  CHECK(rule_of(replace(kSmall, R"("p_min_kw": 0, "p_max_kw": 300)", R"("p_min_kw": 400, "p_max_kw": 300)"))
            .find("ordered-limits") != std::string::npos);
  CHECK(rule_of(replace(kSmall, R"("from": "a", "to": "b")", R"("from": "a", "to": "a")")).find("distinct-endpoints") !=
        std::string::npos);
  CHECK(rule_of(replace(kSmall, R"("phases": "ab", "p_kw")", R"("phases": "abc", "p_kw")")).find("phase-subset") !=
        std::string::npos);
  CHECK(rule_of(replace(kSmall, R"("kind": "droop")", R"("kind": "pq_dispatchable")")).find("black-start-droop") !=
        std::string::npos);
  CHECK(rule_of(replace(kSmall, R"("ramp_fraction": 0.5)", R"("ramp_fraction": 0)")).find("positive-ramp") !=
        std::string::npos);
}

TEST_CASE("malformed documents are rejected with a location") {
  CHECK_THROWS_AS(parse_feeder("{"), FeederError);
  try {
    parse_feeder(replace(kSmall, R"("kind": "droop")", R"("kind": "turbine")"));
    FAIL("expected an error");
  } catch (const FeederError& e) {
    CHECK(e.path().find("/ders/0") == 0);
  }
  CHECK_THROWS_AS(parse_feeder(replace(kSmall, R"("name": "two-node")", R"("name": "x", "colour": 3)")), FeederError);
}

TEST_CASE("per-unit conversion uses the node base") {
  FeederModel f = parse_feeder(kSmall);
  FeederModel pu = to_per_unit(f);
  const double zb = 2.4 * 2.4 / 1.0;
  CHECK(pu.units == Units::PerUnit);
  CHECK(pu.branches[0].impedance(0, 0).real() == doctest::Approx(0.3 / zb));
  CHECK(pu.branches[0].ampacity[0] == doctest::Approx(200 / (1000.0 / 2.4)));
  CHECK(pu.ders[0].p_max == doctest::Approx(0.3));
  CHECK(pu.loads[0].q[1] == doctest::Approx(0.006));
  FeederModel back = to_physical(pu);
  CHECK(back.branches[0].impedance(1, 1).imag() == doctest::Approx(0.6));
  CHECK(back.loads[0].p[0] == doctest::Approx(20));
  CHECK(to_per_unit(pu).branches[0].impedance(0, 0) == pu.branches[0].impedance(0, 0));
}

TEST_CASE("profiles and forecasts hold their last value") {
  Load l;
  l.profile = {0.5, 0.8};
  CHECK(l.multiplier_at(1) == 0.5);
  CHECK(l.multiplier_at(5) == 0.8);
  CHECK(Load{}.multiplier_at(3) == 1.0);
  Der d;
  d.forecast_p = {{1, 2, 3}};
  CHECK(d.forecast_p_at(4)[2] == 3);
}

TEST_CASE("scenario parsing") {
  ScenarioConfig c = parse_scenario(R"({"n_steps": 5, "v_min": 0.9, "load_unbalance_limit": null})");
  REQUIRE(c.n_steps);
  CHECK(*c.n_steps == 5);
  CHECK(c.v_min == 0.9);
  CHECK(std::isinf(c.load_unbalance_limit));
  CHECK_FALSE(parse_scenario("{}").n_steps);
  CHECK_THROWS_AS(parse_scenario(R"({"n_steps": 0})"), FeederError);
  CHECK_THROWS_AS(parse_scenario(R"({"v_min": 1.1, "v_max": 1.0})"), FeederError);
  CHECK_THROWS_AS(parse_scenario(R"({"polygon_sides": 4})"), FeederError);
  ScenarioConfig r = parse_scenario(serialize_scenario(c));
  CHECK(*r.n_steps == 5);
  CHECK(std::isinf(r.load_unbalance_limit));
}

TEST_CASE("fixtures validate") {
  for (const char* name : {"ieee123_base.json", "toy_chain.json", "toy_two_droop.json", "toy_no_black_start.json"}) {
    CAPTURE(name);
    CHECK(validate(load_feeder_file(fixture(name))).ok());
  }
}
