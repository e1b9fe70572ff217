#include <doctest.h>

#include "mgrestore/restoration_formulation.hpp"
#include "support/fixtures.hpp"

using namespace mgrestore;
namespace ts = testing_support;

namespace {

ScenarioConfig steps(int n) {
  ScenarioConfig c;
  c.n_steps = n;
  return c;
}

}  // namespace

TEST_CASE("variables follow the naming scheme") {
  FeederModel f = load_feeder_file(ts::fixture("toy_chain.json"));
  RestorationProblem p = assemble(f, steps(2));
  CHECK(p.n_steps == 2);
  CHECK(p.model.find("xN_n1_1") >= 0);
  CHECK(p.model.find("xG_G1_2") >= 0);
  CHECK(p.model.find("Vre_n3_b_2") >= 0);
  CHECK(p.model.find("Pref_G1_a_1") >= 0);
  CHECK(p.model.find("Pdg_G2_c_1") >= 0);
  CHECK(p.model.find("PL_D4_a_1") >= 0);
  CHECK(p.model.find("PL_D2_a_1") < 0);
  CHECK(p.model.find("wBre_S23_a_1") >= 0);
  CHECK(p.index.key_of(p.model.find("xK_K0_1")).symbol == "xK");
  CHECK(p.model.find("xN_n1_3") < 0);
}

TEST_CASE("every row carries a family tag") {
  FeederModel f = load_feeder_file(ts::fixture("toy_chain.json"));
  RestorationProblem p = assemble(f, steps(3));
  auto fam = p.family_counts();
  CHECK(fam.count("") == 0);
  CHECK(fam.at("startup_single_droop") == 1);
  CHECK(fam.at("startup_switches_open") == 3);
  CHECK(fam.at("block_start") == 4);
  CHECK(fam.at("block_reach") == 4 * 2);
  CHECK(fam.at("sync_single") == 2);
  CHECK(fam.count("load_unbalance") == 0);
  CHECK(p.provenance_report().find("startup_single_droop.t1\tstartup_single_droop") != std::string::npos);
  CHECK(audit_big_m(p.model).empty());
}

TEST_CASE("variable count grows linearly with the horizon") {
  FeederModel f = load_feeder_file(ts::fixture("toy_two_droop.json"));
  std::vector<std::size_t> n;
  for (int t = 1; t <= 4; ++t) n.push_back(assemble(f, steps(t)).model.num_variables());
  CHECK(n[1] - n[0] == n[2] - n[1]);
  CHECK(n[2] - n[1] == n[3] - n[2]);
}

TEST_CASE("unset horizon uses the generous estimate") {
  FeederModel f = load_feeder_file(ts::fixture("toy_chain.json"));
  CHECK(assemble(f, ScenarioConfig{}).n_steps == 4);
  ScenarioConfig bad;
  bad.n_steps = 0;
  CHECK_THROWS_AS(assemble(f, bad), FormulationError);
}

TEST_CASE("a start needs a black-start droop unit") {
  FeederModel f = load_feeder_file(ts::fixture("toy_no_black_start.json"));
  try {
    assemble(f, steps(3));
    FAIL("expected an error");
  } catch (const FormulationError& e) {
    CHECK(std::string(e.what()).find("black-start") != std::string::npos);
  }
  CHECK_THROWS_AS(assemble(f, ScenarioConfig{}), FormulationError);
}

TEST_CASE("optional families follow the scenario") {
  FeederModel f = load_feeder_file(ts::fixture("toy_two_droop.json"));
  ScenarioConfig c = steps(2);
  c.load_unbalance_limit = 0.2;
  c.dg_phase_unbalance_limit = 0.1;
  c.enforce_ampacity = true;
  auto fam = assemble(f, c).family_counts();
  CHECK(fam.at("load_unbalance") == 2 * 6);
  CHECK(fam.at("dg_unbalance") == 2 * 2 * 6);
  CHECK(fam.at("ampacity_polygon") > 0);
  CHECK(fam.at("line_current") > 0);
}

TEST_CASE("damaged elements are held out") {
  FeederModel f = load_feeder_file(ts::fixture("toy_chain.json"));
  f.loads[1].damaged = true;
  f.ders[1].damaged = true;
  RestorationProblem p = assemble(f, steps(2));
  const auto& rows = p.model.constraints();
  auto has = [&](const std::string& name) {
    return std::any_of(rows.begin(), rows.end(), [&](const Constraint& c) { return c.name == name; });
  };
  CHECK(has("damaged_off.D4.t1"));
  CHECK(has("damaged_off.G2.t2"));
  CHECK_FALSE(has("load_host.D4.t1"));
}

TEST_CASE("the builder rejects disconnected feeders") {
  FeederModel f = load_feeder_file(ts::fixture("toy_chain.json"));
  f.branches[3].damaged = true;
  CHECK_THROWS_AS(RestorationBuilder(f, steps(2), 2), FormulationError);
}
