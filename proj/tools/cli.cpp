#include "mgrestore/cli.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgrestore/graph_analysis.hpp"
#include "mgrestore/network_matrices.hpp"
#include "mgrestore/restoration_formulation.hpp"
#include "mgrestore/solution_audit.hpp"

namespace mgrestore {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::NondispatchableCapacityFactor: return "nondispatchable_capacity_factor";
    case SweepParameter::DrLowerBoundFactor: return "dr_lower_bound_factor";
    case SweepParameter::NSteps: return "n_steps";
  }
  return "";
}

SweepSpec parse_sweep_spec(std::string_view text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FeederError("", std::string("sweep spec is not JSON: ") + e.what());
  }
  SweepSpec s;
  const std::string name = j.value("parameter", "");
  if (name == "nondispatchable_capacity_factor")
    s.parameter = SweepParameter::NondispatchableCapacityFactor;
  else if (name == "dr_lower_bound_factor")
    s.parameter = SweepParameter::DrLowerBoundFactor;
  else if (name == "n_steps")
    s.parameter = SweepParameter::NSteps;
  else
    throw FeederError("/parameter", "unknown sweep parameter '" + name + "'");
  if (!j.contains("values") || !j["values"].is_array() || j["values"].empty())
    throw FeederError("/values", "sweep needs a non-empty list of values");
  for (std::size_t i = 0; i < j["values"].size(); ++i) {
    const auto& v = j["values"][i];
    const std::string where = "/values/" + std::to_string(i);
    if (!v.is_number()) throw FeederError(where, "not a number");
    const double x = v.get<double>();
    switch (s.parameter) {
      case SweepParameter::NondispatchableCapacityFactor:
        if (!(x >= 0.0) || !std::isfinite(x)) throw FeederError(where, "capacity factor must be >= 0");
        break;
      case SweepParameter::DrLowerBoundFactor:
        if (!(x >= 0.0 && x <= 1.0)) throw FeederError(where, "DR lower-bound factor must lie in [0, 1]");
        break;
      case SweepParameter::NSteps:
        if (!(x >= 1.0) || x != std::floor(x) || x > 1000) throw FeederError(where, "n_steps must be a positive integer");
        break;
    }
    s.values.push_back(x);
  }
  auto resolve = [&](const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute() || base_dir.empty()) return p;
    return (fs::path(base_dir) / p).lexically_normal().string();
  };
  s.feeder = resolve(j.value("feeder", ""));
  s.scenario = resolve(j.value("scenario", ""));
  return s;
}

SweepSpec load_sweep_spec(const std::string& path) {
  return parse_sweep_spec(read_text_file(path), fs::path(path).parent_path().string());
}

FeederModel scale_nondispatchable(const FeederModel& feeder, double factor) {
  FeederModel f = feeder;
  for (auto& d : f.ders) {
    if (d.kind != DerKind::PqNondispatchable) continue;
    d.p_min *= factor;
    d.p_max *= factor;
    d.q_min *= factor;
    d.q_max *= factor;
    for (auto* series : {&d.forecast_p, &d.forecast_q})
      for (auto& v : *series)
        for (auto& x : v) x *= factor;
  }
  return f;
}

FeederModel set_dr_lower_bound(const FeederModel& feeder, double factor) {
  FeederModel f = feeder;
  for (auto& l : f.loads)
    if (l.controllable_dr) l.dr_min_fraction = factor * l.dr_max_fraction;
  return f;
}

namespace {

/// Module that raised an exception, for messages and exit codes.
struct Failure {
  std::string module;
  int code;
  std::string message;
};

Failure classify(const std::exception& e) {
  if (dynamic_cast<const FeederError*>(&e)) return {"feeder_model", kExitValidation, e.what()};
  if (dynamic_cast<const GraphError*>(&e)) return {"graph_analysis", kExitValidation, e.what()};
  if (dynamic_cast<const NetworkError*>(&e)) return {"network_matrices", kExitValidation, e.what()};
  if (dynamic_cast<const FormulationError*>(&e)) return {"restoration_formulation", kExitValidation, e.what()};
  if (dynamic_cast<const MilpError*>(&e)) return {"milp_core", kExitSolver, e.what()};
  if (dynamic_cast<const SolverError*>(&e)) return {"solver_interface", kExitSolver, e.what()};
  if (dynamic_cast<const AuditError*>(&e)) return {"solution_audit", kExitAudit, e.what()};
  return {"mgrestore", kExitSolver, e.what()};
}

SweepRow solve_point(const SweepSpec& spec, double value, const FeederModel& feeder, const ScenarioConfig& base,
                     const SolveOptions& options) {
  SweepRow row;
  row.value = value;
  FeederModel f = feeder;
  ScenarioConfig c = base;
  switch (spec.parameter) {
    case SweepParameter::NondispatchableCapacityFactor: f = scale_nondispatchable(feeder, value); break;
    case SweepParameter::DrLowerBoundFactor: f = set_dr_lower_bound(feeder, value); break;
    case SweepParameter::NSteps: c.n_steps = static_cast<int>(value); break;
  }
  const auto start = std::chrono::steady_clock::now();
  try {
    RestorationProblem p = assemble(f, c);
    row.variables = p.model.num_variables();
    row.binaries = p.model.num_binaries();
    row.constraints = p.model.num_constraints();
    SolveResult r = solve(p.model, options);
    row.status = std::string(to_string(r.status));
    row.gap = r.gap;
    row.message = r.message;
    if (has_assignment(r.status)) {
      RestorationPlan plan = extract_plan(p, r.values, options.integrality_tolerance);
      row.objective_kw = plan.served_energy_kw();
      AuditReport a = audit(plan, f, c);
      row.audit_pass = a.pass();
      if (!row.audit_pass) row.message = "audit failed: " + a.failed_families().front();
    }
  } catch (const std::exception& e) {
    Failure fl = classify(e);
    row.status = fl.code == kExitValidation ? "invalid" : "error";
    row.message = fl.module + ": " + fl.message;
  }
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const FeederModel& feeder, const ScenarioConfig& base,
                                const SolveOptions& options, int jobs) {
  std::vector<SweepRow> rows(spec.values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) rows[i] = solve_point(spec, spec.values[i], feeder, base, options);
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(rows.size())));
  std::vector<std::thread> pool;
  for (int k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "value,objective_kw,status,variables,binaries,constraints,wall_time_s,gap,audit,message\n";
  for (const auto& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%s,%zu,%zu,%zu,%.3f,%.6g,%s,", r.value, r.objective_kw,
                  r.status.c_str(), r.variables, r.binaries, r.constraints, r.wall_time, r.gap,
                  r.audit_pass ? "pass" : "fail");
    os << buf << csv_field(r.message) << '\n';
  }
  return os.str();
}

namespace {

class RunDir {
 public:
  RunDir(std::string command, int argc, char** argv) : command_(std::move(command)) {
    for (int i = 0; i < argc; ++i) args_.push_back(argv[i]);
    started_ = std::time(nullptr);
    clock_ = std::chrono::steady_clock::now();
  }

  void open(const std::string& dir) {
    path_ = dir.empty() ? fs::path("mgrestore_runs") / command_ : fs::path(dir);
    fs::create_directories(path_);
  }

  void write(const std::string& name, const std::string& text) {
    std::ofstream out(path_ / name, std::ios::binary);
    if (!out) throw SolverError("cannot write " + (path_ / name).string());
    out << text;
    files_.push_back(name);
  }

  json& info() { return info_; }

  int finish(int code, const std::string& message = "") {
    if (path_.empty()) return code;
    json m;
    m["command"] = command_;
    m["arguments"] = args_;
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started_));
    m["started"] = stamp;
    m["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
    m["exit_code"] = code;
    if (!message.empty()) m["message"] = message;
    m["outputs"] = files_;
    m["details"] = info_;
    std::ofstream out(path_ / "manifest.json");
    out << m.dump(2) << '\n';
    return code;
  }

  const fs::path& path() const { return path_; }

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::time_t started_{};
  std::chrono::steady_clock::time_point clock_;
  fs::path path_;
  std::vector<std::string> files_;
  json info_ = json::object();
};

struct Common {
  std::string feeder, scenario, out_dir, solver = "highs", solver_path;
  std::optional<int> steps;
  std::optional<double> gap, time_limit;
  int threads = 1;
  int jobs = 1;
  bool keep_files = false;
};

int fail(RunDir& run, const std::exception& e) {
  Failure f = classify(e);
  std::cerr << "mgrestore: " << f.module << ": " << f.message << '\n';
  return run.finish(f.code, f.module + ": " + f.message);
}

ScenarioConfig scenario_for(const Common& o) {
  ScenarioConfig c = o.scenario.empty() ? ScenarioConfig{} : load_scenario_file(o.scenario);
  if (o.steps) c.n_steps = *o.steps;
  auto problems = check_scenario(c);
  if (!problems.empty()) throw FeederError("scenario", problems.front());
  return c;
}

SolveOptions solve_options(const Common& o, const ScenarioConfig& c) {
  SolveOptions s;
  s.solver = o.solver;
  s.solver_path = o.solver_path;
  s.gap = o.gap.value_or(c.optimality_gap);
  s.time_limit = o.time_limit.value_or(c.solver_time_limit);
  s.threads = o.threads;
  s.residual_tolerance = c.residual_tolerance;
  s.integrality_tolerance = c.integrality_tolerance;
  s.keep_files = o.keep_files;
  return s;
}

/// Writes plan, summary and audit; returns the audit exit code.
int report_plan(RunDir& run, const RestorationPlan& plan, const FeederModel& feeder, const ScenarioConfig& c) {
  run.write("plan.json", plan_to_json(plan) + "\n");
  run.write("summary.csv", summarize(plan));
  const AuditReport a = audit(plan, feeder, c);
  run.write("audit.json", audit_report_json(a) + "\n");
  run.info()["audit_pass"] = a.pass();
  run.info()["max_linear_residual"] = a.max_linear_residual;
  run.info()["exact_zip_residual"] = a.exact_zip_residual;
  run.info()["served_energy_kw"] = a.served_energy_kw;
  const PlanStep* last = plan.steps.empty() ? nullptr : &plan.steps.back();
  std::cout << "served energy " << a.served_energy_kw << " kW*step";
  if (last) std::cout << ", final step " << phase_sum(last->restored_p) * plan.kva_per_phase << " kW";
  std::cout << ", audit " << (a.pass() ? "pass" : "FAIL") << '\n';
  if (a.pass()) return kExitOk;
  for (const auto& fam : a.failed_families()) {
    const auto& fr = a.families.at(fam);
    std::cerr << "audit: " << fam << ": " << fr.violation_count << " violation(s)";
    if (!fr.violations.empty()) std::cerr << ", e.g. " << fr.violations.front();
    std::cerr << '\n';
  }
  return kExitAudit;
}

int cmd_analyze(const Common& o, RunDir& run) {
  try {
    run.open(o.out_dir);
    const FeederModel f = load_feeder_file(o.feeder);
    const GraphReport rep = analyze(f);
    const std::string text = report_json(f, rep);
    run.write("analysis.json", text + "\n");
    std::cout << text << '\n';
    run.info()["conservative_steps"] = rep.estimate.conservative;
    run.info()["generous_steps"] = rep.estimate.generous;
    return run.finish(kExitOk);
  } catch (const std::exception& e) {
    return fail(run, e);
  }
}

int cmd_plan(const Common& o, RunDir& run) {
  try {
    run.open(o.out_dir);
    const FeederModel f = load_feeder_file(o.feeder);
    const ScenarioConfig c = scenario_for(o);
    RestorationProblem p = assemble(f, c);
    run.info()["n_steps"] = p.n_steps;
    run.info()["variables"] = p.model.num_variables();
    run.info()["binaries"] = p.model.num_binaries();
    run.info()["constraints"] = p.model.num_constraints();
    run.info()["families"] = p.family_counts();
    run.write("model.lp", export_lp(p.model));
    run.write("constraint_families.tsv", p.provenance_report());
    SolveOptions so = solve_options(o, c);
    if (o.keep_files) so.work_dir = (run.path() / "solver").string();
    std::cerr << "mgrestore: " << p.n_steps << " steps, " << p.model.num_variables() << " variables ("
              << p.model.num_binaries() << " binary), " << p.model.num_constraints() << " rows; solving with "
              << so.solver << '\n';
    const SolveResult r = solve(p.model, so);
    run.info()["solver"] = so.solver;
    run.info()["status"] = std::string(to_string(r.status));
    run.info()["objective"] = r.objective;
    run.info()["gap"] = r.gap;
    run.info()["solve_time_s"] = r.wall_time;
    run.info()["max_residual"] = r.max_residual;
    std::cout << "status " << to_string(r.status) << ", objective " << r.objective << ", gap " << r.gap << ", "
              << r.wall_time << " s\n";
    if (r.status == SolveStatus::Infeasible || r.status == SolveStatus::Unbounded)
      return run.finish(kExitInfeasible, "restoration_formulation: model is " + std::string(to_string(r.status)));
    if (!has_assignment(r.status))
      return run.finish(kExitSolver, "solver_interface: " + std::string(to_string(r.status)) +
                                         (r.message.empty() ? "" : ": " + r.message));
    run.write("solution.txt", write_solution_text(p.model, r.values, r.status, r.objective, r.gap));
    const RestorationPlan plan = extract_plan(p, r.values, c.integrality_tolerance);
    return run.finish(report_plan(run, plan, f, c));
  } catch (const std::exception& e) {
    return fail(run, e);
  }
}

int cmd_audit(const Common& o, const std::string& plan_path, const std::string& solution_path, RunDir& run) {
  try {
    run.open(o.out_dir);
    const FeederModel f = load_feeder_file(o.feeder);
    const ScenarioConfig c = scenario_for(o);
    RestorationPlan plan;
    if (!plan_path.empty()) {
      plan = plan_from_json(read_text_file(plan_path));
    } else {
      RestorationProblem p = assemble(f, c);
      std::vector<std::string> warnings;
      const auto values = parse_solution(read_text_file(solution_path), p.model, &warnings);
      for (const auto& w : warnings) std::cerr << "mgrestore: " << w << '\n';
      plan = extract_plan(p, values, c.integrality_tolerance);
    }
    return run.finish(report_plan(run, plan, f, c));
  } catch (const std::exception& e) {
    return fail(run, e);
  }
}

int cmd_sweep(const Common& o, const std::string& spec_path, RunDir& run) {
  try {
    run.open(o.out_dir);
    SweepSpec spec = load_sweep_spec(spec_path);
    if (!o.feeder.empty()) spec.feeder = o.feeder;
    if (!o.scenario.empty()) spec.scenario = o.scenario;
    if (spec.feeder.empty()) throw FeederError("/feeder", "sweep needs a feeder (spec field or --feeder)");
    const FeederModel f = load_feeder_file(spec.feeder);
    Common oc = o;
    oc.scenario = spec.scenario;
    const ScenarioConfig c = scenario_for(oc);
    const SolveOptions so = solve_options(o, c);
    const auto rows = run_sweep(spec, f, c, so, o.jobs);
    const std::string csv = sweep_csv(rows);
    run.write("sweep.csv", csv);
    std::cout << csv;
    run.info()["parameter"] = to_string(spec.parameter);
    run.info()["feeder"] = spec.feeder;
    run.info()["scenario"] = spec.scenario;
    run.info()["jobs"] = o.jobs;
    return run.finish(kExitOk);
  } catch (const std::exception& e) {
    return fail(run, e);
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Sequential service restoration planning for microgrid-capable feeders"};
  app.require_subcommand(1);
  Common o;
  std::string plan_path, solution_path, sweep_path;

  auto feeder_opt = [&](CLI::App* sc, bool required) {
    auto* opt = sc->add_option("--feeder", o.feeder, "Feeder JSON")->check(CLI::ExistingFile);
    if (required) opt->required();
  };
  auto solver_opts = [&](CLI::App* sc) {
    sc->add_option("--scenario", o.scenario, "Scenario JSON")->check(CLI::ExistingFile);
    sc->add_option("--steps", o.steps, "Restoration steps (default: generous estimate)")->check(CLI::PositiveNumber);
    sc->add_option("--solver", o.solver, "highs or cbc")->check(CLI::IsMember({"highs", "cbc"}));
    sc->add_option("--solver-path", o.solver_path, "CBC executable or Python interpreter for HiGHS");
    sc->add_option("--gap", o.gap, "Relative optimality gap")->check(CLI::Range(0.0, 1.0));
    sc->add_option("--time-limit", o.time_limit, "Solver time limit, seconds")->check(CLI::PositiveNumber);
    sc->add_option("--threads", o.threads, "Solver threads")->check(CLI::PositiveNumber);
    sc->add_flag("--keep-files", o.keep_files, "Keep solver scratch files in the run directory");
  };

  auto* analyze_cmd = app.add_subcommand("analyze", "Bus-block graph and restoration step estimates");
  feeder_opt(analyze_cmd, true);
  auto* plan_cmd = app.add_subcommand("plan", "Build, solve and audit a restoration plan");
  feeder_opt(plan_cmd, true);
  solver_opts(plan_cmd);
  auto* audit_cmd = app.add_subcommand("audit", "Check a plan or a solver assignment");
  feeder_opt(audit_cmd, true);
  audit_cmd->add_option("--scenario", o.scenario, "Scenario JSON")->check(CLI::ExistingFile);
  audit_cmd->add_option("--steps", o.steps, "Steps of the model behind --solution")->check(CLI::PositiveNumber);
  auto* src = audit_cmd->add_option_group("source");
  src->add_option("--plan", plan_path, "Plan JSON")->check(CLI::ExistingFile);
  src->add_option("--solution", solution_path, "Assignment text, one 'name value' per line")->check(CLI::ExistingFile);
  src->require_option(1);
  auto* sweep_cmd = app.add_subcommand("sweep", "Parameter study, one solve per value");
  sweep_cmd->add_option("--sweep", sweep_path, "Sweep spec JSON")->required()->check(CLI::ExistingFile);
  feeder_opt(sweep_cmd, false);
  solver_opts(sweep_cmd);
  sweep_cmd->add_option("--jobs", o.jobs, "Points solved concurrently")->check(CLI::PositiveNumber);
  for (auto* sc : {analyze_cmd, plan_cmd, audit_cmd, sweep_cmd})
    sc->add_option("--out-dir", o.out_dir, "Run directory (default mgrestore_runs/<command>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  RunDir run(app.get_subcommands().front()->get_name(), argc, argv);
  if (*analyze_cmd) return cmd_analyze(o, run);
  if (*plan_cmd) return cmd_plan(o, run);
  if (*audit_cmd) return cmd_audit(o, plan_path, solution_path, run);
  return cmd_sweep(o, sweep_path, run);
}

}  // namespace mgrestore
