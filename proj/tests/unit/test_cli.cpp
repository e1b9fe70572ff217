#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mgrestore/cli.hpp"
#include "support/fixtures.hpp"

using namespace mgrestore;
namespace fs = std::filesystem;
namespace ts = testing_support;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "mgrestore");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mgrestore_cli_test_" + name);
  fs::remove_all(p);
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool have_solver() { return adapter_available("highs") || adapter_available("cbc"); }
std::string solver() { return adapter_available("highs") ? "highs" : "cbc"; }

}  // namespace

TEST_CASE("sweep specs are validated") {
  SweepSpec s = parse_sweep_spec(R"({"parameter": "n_steps", "values": [2, 3], "feeder": "toy.json"})", "/data");
  CHECK(s.parameter == SweepParameter::NSteps);
  CHECK(s.values == std::vector<double>{2, 3});
  CHECK(s.feeder == "/data/toy.json");
  CHECK(s.scenario.empty());
  CHECK_THROWS_AS(parse_sweep_spec(R"({"parameter": "n_steps", "values": [2.5]})"), FeederError);
  CHECK_THROWS_AS(parse_sweep_spec(R"({"parameter": "n_steps", "values": [0]})"), FeederError);
  CHECK_THROWS_AS(parse_sweep_spec(R"({"parameter": "dr_lower_bound_factor", "values": [1.5]})"), FeederError);
  CHECK_THROWS_AS(parse_sweep_spec(R"({"parameter": "nondispatchable_capacity_factor", "values": [-1]})"),
                  FeederError);
  CHECK_THROWS_AS(parse_sweep_spec(R"({"parameter": "wind", "values": [1]})"), FeederError);
  CHECK_THROWS_AS(parse_sweep_spec(R"({"parameter": "n_steps", "values": []})"), FeederError);
  CHECK_THROWS_AS(parse_sweep_spec("not json"), FeederError);
  SweepSpec file = load_sweep_spec(ts::fixture("sweeps/dr_lower_bound.json"));
  CHECK(fs::exists(file.feeder));
}

TEST_CASE("sweep transforms touch only their targets") {
  FeederModel f = load_feeder_file(ts::fixture("toy_chain.json"));
  FeederModel g = scale_nondispatchable(f, 2.0);
  for (std::size_t i = 0; i < f.ders.size(); ++i) {
    const double k = f.ders[i].kind == DerKind::PqNondispatchable ? 2.0 : 1.0;
    CHECK(g.ders[i].p_max == k * f.ders[i].p_max);
    if (!f.ders[i].forecast_p.empty()) CHECK(g.ders[i].forecast_p[0][0] == k * f.ders[i].forecast_p[0][0]);
  }
  FeederModel h = set_dr_lower_bound(f, 0.5);
  for (std::size_t i = 0; i < f.loads.size(); ++i)
    CHECK(h.loads[i].dr_min_fraction ==
          (f.loads[i].controllable_dr ? 0.5 * f.loads[i].dr_max_fraction : f.loads[i].dr_min_fraction));
}

TEST_CASE("sweep rows serialize with a fixed header") {
  SweepRow r;
  r.value = 0.5;
  r.objective_kw = 100.0;
  r.status = "optimal";
  r.audit_pass = true;
  r.message = "a,b";
  const std::string csv = sweep_csv({r});
  CHECK(csv.rfind("value,objective_kw,status,variables,binaries,constraints,wall_time_s,gap,audit,message\n", 0) == 0);
  CHECK(csv.find("\"a,b\"") != std::string::npos);
}

TEST_CASE("analyze writes the estimates") {
  const std::string out = scratch("analyze");
  CHECK(run({"analyze", "--feeder", ts::fixture("toy_chain.json"), "--out-dir", out}) == kExitOk);
  CHECK(fs::exists(fs::path(out) / "manifest.json"));
  CHECK(slurp(fs::path(out) / "manifest.json").find("\"exit_code\": 0") != std::string::npos);
}

TEST_CASE("bad input maps to the validation exit code") {
  const std::string out = scratch("bad");
  CHECK(run({"plan", "--out-dir", out}) == kExitValidation);
  CHECK(run({"analyze", "--feeder", "/nonexistent.json", "--out-dir", out}) == kExitValidation);
  CHECK(run({"plan", "--feeder", ts::fixture("toy_no_black_start.json"), "--out-dir", out}) == kExitValidation);
  CHECK(slurp(fs::path(out) / "manifest.json").find("restoration_formulation:") != std::string::npos);
  CHECK(run({"audit", "--feeder", ts::fixture("toy_chain.json"), "--out-dir", out}) == kExitValidation);
}

TEST_CASE("plan and audit round trip through files") {
  if (!have_solver()) return;
  const std::string out = scratch("plan");
  REQUIRE(run({"plan", "--feeder", ts::fixture("toy_chain.json"), "--steps", "4", "--solver", solver(), "--gap",
               "0", "--out-dir", out}) == kExitOk);
  for (const char* f : {"model.lp", "solution.txt", "plan.json", "summary.csv", "audit.json", "manifest.json"})
    CHECK(fs::exists(fs::path(out) / f));
  const std::string again = scratch("audit");
  CHECK(run({"audit", "--feeder", ts::fixture("toy_chain.json"), "--plan", (fs::path(out) / "plan.json").string(),
             "--out-dir", again}) == kExitOk);
  CHECK(run({"audit", "--feeder", ts::fixture("toy_chain.json"), "--steps", "4", "--solution",
             (fs::path(out) / "solution.txt").string(), "--out-dir", again}) == kExitOk);

  // a load switched off at the last step fails the audit
  std::string plan = slurp(fs::path(out) / "plan.json");
  const std::string tampered = (fs::path(again) / "tampered.json").string();
  {
    const auto pos = plan.rfind("\"loads_on\": [");
    REQUIRE(pos != std::string::npos);
    const auto end = plan.find(']', pos);
    plan.replace(pos, end - pos + 1, "\"loads_on\": []");
    std::ofstream(tampered) << plan;
  }
  CHECK(run({"audit", "--feeder", ts::fixture("toy_chain.json"), "--plan", tampered, "--out-dir", again}) ==
        kExitAudit);
}

TEST_CASE("an infeasible horizon maps to its exit code") {
  if (!have_solver()) return;
  const std::string out = scratch("infeasible");
  // droop units that cannot run below far more than the whole demand
  FeederModel f = load_feeder_file(ts::fixture("toy_two_droop.json"));
  for (auto& d : f.ders) d.p_min = d.p_max = 50000.0;
  fs::create_directories(out);
  const std::string path = (fs::path(out) / "feeder.json").string();
  std::ofstream(path) << serialize_feeder(f);
  const int code = run({"plan", "--feeder", path, "--steps", "2", "--solver", solver(), "--out-dir", out});
  CHECK(code == kExitInfeasible);
}

TEST_CASE("sweeps write one row per value") {
  if (!have_solver()) return;
  const std::string out = scratch("sweep");
  REQUIRE(run({"sweep", "--sweep", ts::fixture("sweeps/n_steps.json"), "--solver", solver(), "--gap", "0", "--jobs",
               "2", "--out-dir", out}) == kExitOk);
  const std::string csv = slurp(fs::path(out) / "sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
