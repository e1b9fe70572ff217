#include "mgrestore/solver_interface.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "mgrestore/feeder_model.hpp"
#include "mgrestore/restoration_formulation.hpp"

namespace mgrestore {

namespace fs = std::filesystem;

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SolverError("cannot write " + path);
  out << text;
  if (!out) throw SolverError("cannot write " + path);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SolverError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_command(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  if (rc == -1) throw SolverError("could not start: " + cmd);
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return 128;
}

std::string tail(const std::string& text, std::size_t lines) {
  std::size_t pos = text.size();
  for (std::size_t n = 0; n <= lines && pos > 0; ++n) {
    pos = text.rfind('\n', pos - 1);
    if (pos == std::string::npos) return text;
  }
  return text.substr(pos + 1);
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return (v && *v) ? std::string(v) : fallback;
}

bool executable(const std::string& path) { return !path.empty() && ::access(path.c_str(), X_OK) == 0; }

struct ScratchDir {
  fs::path path;
  bool owned = false;
  bool keep = false;
  ~ScratchDir() {
    if (owned && !keep) {
      std::error_code ec;
      fs::remove_all(path, ec);
    }
  }
};

/// Rows of a CBC `-solu` file: "[**] index name value [reduced cost]".
std::unordered_map<std::string, double> read_cbc_values(const std::string& text, std::string& status_line) {
  std::unordered_map<std::string, double> out;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      status_line = line;
      first = false;
      continue;
    }
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (!tok.empty() && tok[0] == "**") tok.erase(tok.begin());
    if (tok.size() < 3) continue;
    try {
      out[tok[1]] = std::stod(tok[2]);
    } catch (const std::exception&) {
      throw SolverError("unreadable CBC solution line: " + line);
    }
  }
  return out;
}

/// Values from a CBC basis written with `-outputFormat 3`; columns not listed sit at their lower bound.
std::vector<double> read_cbc_basis(const std::string& text, const MilpModel& model) {
  std::vector<double> values(model.num_variables());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& v = model.variables()[i];
    values[i] = std::isfinite(v.lower) ? v.lower : (std::isfinite(v.upper) ? v.upper : 0.0);
  }
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.size() < 3) continue;
    const std::string& code = tok[0];
    if (code != "XU" && code != "XL" && code != "UL" && code != "LL") continue;
    const VarId id = model.find(tok[1]);
    if (id < 0) continue;  // a row listed as nonbasic
    try {
      values[static_cast<std::size_t>(id)] = std::stod(tok.back());
    } catch (const std::exception&) {
      throw SolverError("unreadable CBC basis line: " + line);
    }
  }
  return values;
}

/// Copy of `model` with every binary fixed at its rounded value and relaxed to continuous.
MilpModel fix_integers(const MilpModel& model, const std::vector<double>& values) {
  MilpModel fixed;
  for (std::size_t i = 0; i < model.num_variables(); ++i) {
    const auto& v = model.variables()[i];
    if (v.type == VarType::Binary) {
      const double r = std::round(values[i]);
      fixed.add_variable(v.name, r, r, VarType::Continuous);
    } else {
      fixed.add_variable(v.name, v.lower, v.upper, VarType::Continuous);
    }
  }
  for (const auto& row : model.constraints()) {
    LinExpr e;
    for (const auto& [v, c] : row.terms) e.add(v, c);
    fixed.add_constraint(row.name, e, row.sense, row.rhs, row.tag);
  }
  LinExpr obj;
  for (const auto& [v, c] : model.objective()) obj.add(v, c);
  fixed.set_objective(obj);
  return fixed;
}

std::optional<double> log_number(const std::string& log, const std::string& label) {
  auto pos = log.rfind(label);
  if (pos == std::string::npos) return std::nullopt;
  try {
    return std::stod(log.substr(pos + label.size()));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::FeasibleGap: return "feasible_gap";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::TimeLimit: return "time_limit";
    case SolveStatus::Error: return "error";
  }
  return "error";
}

std::optional<SolveStatus> solve_status_from_string(std::string_view s) {
  for (auto st : {SolveStatus::Optimal, SolveStatus::FeasibleGap, SolveStatus::Infeasible, SolveStatus::Unbounded,
                  SolveStatus::TimeLimit, SolveStatus::Error})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

SolutionText read_solution_text(std::string_view text) {
  SolutionText out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    auto number = [&](const std::string& s) {
      try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw SolverError("solution line " + std::to_string(lineno) + ": '" + s + "' is not a number");
      }
    };
    if (tok[0] == "#") {
      if (tok.size() != 3) continue;  // free comment
      if (tok[1] == "status") {
        auto st = solve_status_from_string(tok[2]);
        if (!st) throw SolverError("solution line " + std::to_string(lineno) + ": unknown status '" + tok[2] + "'");
        out.status = st;
      } else if (tok[1] == "objective") {
        out.objective = number(tok[2]);
      } else if (tok[1] == "gap") {
        out.gap = number(tok[2]);
      }
      continue;
    }
    if (tok.size() != 2) throw SolverError("solution line " + std::to_string(lineno) + ": expected 'name value'");
    if (!out.values.emplace(tok[0], number(tok[1])).second)
      throw SolverError("solution line " + std::to_string(lineno) + ": '" + tok[0] + "' given twice");
  }
  return out;
}

std::string write_solution_text(const MilpModel& model, const std::vector<double>& values, SolveStatus status,
                                double objective, double gap) {
  std::string out = "# status " + std::string(to_string(status)) + "\n";
  out += "# objective " + fmt(objective) + "\n";
  out += "# gap " + fmt(gap) + "\n";
  return out + format_assignment(model, values);
}

std::vector<double> parse_solution(std::string_view text, const MilpModel& model, std::vector<std::string>* warnings) {
  SolutionText s = read_solution_text(text);
  std::vector<double> values(model.num_variables());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& name = model.variables()[i].name;
    auto it = s.values.find(name);
    if (it == s.values.end()) throw SolverError("solution is missing variable '" + name + "'");
    values[i] = it->second;
  }
  if (warnings) {
    for (const auto& [name, v] : s.values)
      if (model.find(name) < 0) warnings->push_back("ignoring unknown variable '" + name + "'");
  }
  return values;
}

HighsAdapter::HighsAdapter(std::string python, std::string wrapper)
    : python_(python.empty() ? env_or("MGRESTORE_PYTHON", MGRESTORE_DEFAULT_PYTHON) : std::move(python)),
      wrapper_(wrapper.empty() ? env_or("MGRESTORE_HIGHS_WRAPPER", MGRESTORE_DEFAULT_HIGHS_WRAPPER)
                               : std::move(wrapper)) {}

void HighsAdapter::run(const std::string& lp_path, const std::string& solution_path, const SolveOptions& options,
                       const MilpModel&) {
  if (!fs::exists(wrapper_)) throw SolverError("HiGHS wrapper not found at " + wrapper_);
  const std::string log = solution_path + ".log";
  std::string cmd = shell_quote(python_) + " " + shell_quote(wrapper_) + " " + shell_quote(lp_path) + " " +
                    shell_quote(solution_path) + " --gap " + fmt(options.gap) + " --time-limit " +
                    fmt(options.time_limit) + " --threads " + std::to_string(options.threads) +
                    (options.polish ? " --polish" : "") + " > " + shell_quote(log) + " 2>&1";
  const int rc = run_command(cmd);
  if (rc != 0) {
    std::string detail = fs::exists(log) ? tail(slurp(log), 8) : "";
    throw SolverError("HiGHS wrapper exited with code " + std::to_string(rc) + (detail.empty() ? "" : ":\n" + detail));
  }
}

CbcAdapter::CbcAdapter(std::string executable)
    : exe_(executable.empty() ? env_or("MGRESTORE_CBC", MGRESTORE_DEFAULT_CBC) : std::move(executable)) {}

void CbcAdapter::run(const std::string& lp_path, const std::string& solution_path, const SolveOptions& options,
                     const MilpModel& model) {
  if (!executable(exe_)) throw SolverError("CBC executable not found at '" + exe_ + "'");
  const std::string raw = solution_path + ".cbc";
  const std::string log = solution_path + ".log";
  const bool is_mip = model.num_binaries() > 0;
  std::string cmd = shell_quote(exe_) + " " + shell_quote(lp_path) + " -ratioGap " + fmt(options.gap) + " -sec " +
                    fmt(options.time_limit);
  if (options.threads > 1) cmd += " -threads " + std::to_string(options.threads);
  cmd += " -solve";
  if (!is_mip) cmd += " -outputFormat 3 -basisO " + shell_quote(raw + ".bas");
  cmd += " -printingOptions all -solu " + shell_quote(raw) + " > " + shell_quote(log) + " 2>&1";
  const int rc = run_command(cmd);
  if (rc != 0) throw SolverError("CBC exited with code " + std::to_string(rc) + ":\n" + tail(slurp(log), 8));
  if (!fs::exists(raw)) throw SolverError("CBC wrote no solution:\n" + tail(slurp(log), 8));
  const std::string log_text = slurp(log);

  std::string head;
  auto named = read_cbc_values(slurp(raw), head);
  SolveStatus status;
  bool has_solution = false;
  if (head.rfind("Optimal", 0) == 0) {
    status = SolveStatus::Optimal;
    has_solution = true;
  } else if (head.find("nfeasible") != std::string::npos) {
    status = SolveStatus::Infeasible;
  } else if (head.find("nbounded") != std::string::npos) {
    status = SolveStatus::Unbounded;
  } else if (head.rfind("Stopped", 0) == 0) {
    has_solution = log_text.find("No feasible solution found") == std::string::npos &&
                   log_text.find("Integer solution of") != std::string::npos;
    status = has_solution ? SolveStatus::FeasibleGap : SolveStatus::TimeLimit;
  } else {
    status = SolveStatus::Error;
  }
  if (!has_solution) {
    write_file(solution_path, "# status " + std::string(to_string(status)) + "\n");
    return;
  }

  std::vector<double> values(model.num_variables(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto it = named.find(model.variables()[i].name);
    if (it != named.end()) values[i] = it->second;
  }
  double gap = 0.0;
  if (is_mip) {
    if (auto g = log_number(log_text, "Gap:"))
      gap = *g;
    else if (auto obj = log_number(log_text, "Objective value:"); obj)
      if (auto lb = log_number(log_text, "Lower bound:"))
        gap = std::abs(*obj - *lb) / std::max(1e-10, std::abs(*obj));
  }

  // the -solu file carries 8 digits; a basis file of the fixed-integer LP carries full precision
  if (options.polish || !is_mip) {
    const MilpModel fixed = is_mip ? fix_integers(model, values) : MilpModel();
    std::string bas = raw + ".bas";
    if (is_mip) {
      const std::string fixed_lp = solution_path + ".fixed.lp";
      write_file(fixed_lp, export_lp(fixed));
      std::string cmd2 = shell_quote(exe_) + " " + shell_quote(fixed_lp) + " -solve -outputFormat 3 -basisO " +
                         shell_quote(bas) + " -printingOptions all -solu " + shell_quote(raw + ".fixed") + " >> " +
                         shell_quote(log) + " 2>&1";
      if (run_command(cmd2) != 0) throw SolverError("CBC failed on the fixed-integer re-solve");
      std::string head2;
      read_cbc_values(slurp(raw + ".fixed"), head2);
      if (head2.rfind("Optimal", 0) != 0) bas.clear();
    }
    if (!bas.empty() && fs::exists(bas)) values = read_cbc_basis(slurp(bas), is_mip ? fixed : model);
  }
  double objective = model.objective_constant();
  for (const auto& [v, c] : model.objective()) objective += c * values[static_cast<std::size_t>(v)];
  write_file(solution_path, write_solution_text(model, values, status, objective, gap));
}

std::unique_ptr<SolverAdapter> make_adapter(const SolveOptions& options) {
  const std::string path = options.solver_path.empty() ? env_or("MGRESTORE_SOLVER_PATH", "") : options.solver_path;
  if (options.solver == "highs") return std::make_unique<HighsAdapter>(path);
  if (options.solver == "cbc") return std::make_unique<CbcAdapter>(path);
  throw SolverError("unknown solver '" + options.solver + "' (expected highs or cbc)");
}

bool adapter_available(const std::string& solver) {
  if (solver == "cbc") return executable(env_or("MGRESTORE_CBC", MGRESTORE_DEFAULT_CBC));
  if (solver == "highs") {
    const std::string py = env_or("MGRESTORE_PYTHON", MGRESTORE_DEFAULT_PYTHON);
    return run_command(shell_quote(py) + " -c 'import highspy' > /dev/null 2>&1") == 0;
  }
  return false;
}

SolveResult solve(const MilpModel& model, const SolveOptions& options, SolverAdapter& adapter) {
  const auto start = std::chrono::steady_clock::now();
  ScratchDir dir;
  if (options.work_dir.empty()) {
    std::string tmpl = (fs::temp_directory_path() / "mgrestore-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw SolverError("cannot create a scratch directory");
    dir.path = tmpl;
    dir.owned = true;
  } else {
    dir.path = options.work_dir;
    fs::create_directories(dir.path);
  }
  dir.keep = options.keep_files;
  const std::string lp = (dir.path / "model.lp").string();
  const std::string sol = (dir.path / "solution.txt").string();
  write_file(lp, export_lp(model));
  adapter.run(lp, sol, options, model);

  SolveResult r;
  if (options.keep_files || !dir.owned) r.lp_path = lp;
  const SolutionText text = read_solution_text(slurp(sol));
  if (!text.status) throw SolverError(adapter.name() + " returned no status line");
  r.status = *text.status;
  r.gap = text.gap.value_or(0.0);
  if (has_assignment(r.status)) {
    std::vector<std::string> warnings;
    r.values = parse_solution(slurp(sol), model, &warnings);
    SolvedModel s = apply_solution(model, r.values, options.integrality_tolerance, options.residual_tolerance);
    r.objective = s.objective;
    r.max_residual = s.max_violation;
    if (!s.integrality_violations.empty()) {
      r.status = SolveStatus::Error;
      r.message = "binary '" + model.variable(s.integrality_violations.front()).name + "' is fractional";
    } else if (s.max_violation > options.residual_tolerance) {
      r.status = SolveStatus::Error;
      r.message = "row '" + model.constraints()[s.worst_row].name + "' violated by " + fmt(s.max_violation);
    }
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

SolveResult solve(const MilpModel& model, const SolveOptions& options) {
  auto adapter = make_adapter(options);
  return solve(model, options, *adapter);
}

SolveResult solve(const RestorationProblem& problem, const SolveOptions& options, SolverAdapter& adapter) {
  return solve(problem.model, options, adapter);
}

}  // namespace mgrestore
