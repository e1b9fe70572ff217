#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mgrestore/milp_core.hpp"

namespace mgrestore {

struct RestorationProblem;

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolveStatus { Optimal, FeasibleGap, Infeasible, Unbounded, TimeLimit, Error };

std::string_view to_string(SolveStatus s);
std::optional<SolveStatus> solve_status_from_string(std::string_view s);
/// Optimal and FeasibleGap carry a complete assignment.
inline bool has_assignment(SolveStatus s) { return s == SolveStatus::Optimal || s == SolveStatus::FeasibleGap; }

struct SolveOptions {
  std::string solver = "highs";  // highs | cbc
  std::string solver_path;       // executable (cbc) or python interpreter (highs); empty: default
  double gap = 0.01;
  double time_limit = 600.0;
  int threads = 1;
  bool polish = true;         // re-solve the continuous part with integers fixed
  std::string work_dir;       // empty: a fresh temporary directory, removed afterwards
  bool keep_files = false;
  double residual_tolerance = 1e-6;
  double integrality_tolerance = 1e-6;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Error;
  std::vector<double> values;  // model order; empty without an assignment
  double objective = 0.0;
  double gap = 0.0;
  double wall_time = 0.0;
  double max_residual = 0.0;
  std::string message;
  std::string lp_path;  // set when files are kept
};

/// Parsed solver output: header fields plus `name value` pairs.
struct SolutionText {
  std::optional<SolveStatus> status;
  std::optional<double> objective;
  std::optional<double> gap;
  std::unordered_map<std::string, double> values;
  std::vector<std::string> warnings;
};

/// Reads normalized solution text. Malformed lines raise SolverError with the line number.
SolutionText read_solution_text(std::string_view text);
std::string write_solution_text(const MilpModel& model, const std::vector<double>& values, SolveStatus status,
                                double objective, double gap);

/// Complete assignment in model order. Unknown names are reported as warnings; missing names throw.
std::vector<double> parse_solution(std::string_view text, const MilpModel& model,
                                   std::vector<std::string>* warnings = nullptr);

class SolverAdapter {
 public:
  virtual ~SolverAdapter() = default;
  virtual std::string name() const = 0;
  /// Solves the LP file, writing normalized text to `solution_path`.
  virtual void run(const std::string& lp_path, const std::string& solution_path, const SolveOptions& options,
                   const MilpModel& model) = 0;
};

/// HiGHS through the bundled Python wrapper.
class HighsAdapter : public SolverAdapter {
 public:
  explicit HighsAdapter(std::string python = "", std::string wrapper = "");
  std::string name() const override { return "highs"; }
  void run(const std::string& lp_path, const std::string& solution_path, const SolveOptions& options,
           const MilpModel& model) override;

 private:
  std::string python_, wrapper_;
};

/// CBC command line. Full-precision values come from a fixed-integer LP re-solve and its basis file.
class CbcAdapter : public SolverAdapter {
 public:
  explicit CbcAdapter(std::string executable = "");
  std::string name() const override { return "cbc"; }
  void run(const std::string& lp_path, const std::string& solution_path, const SolveOptions& options,
           const MilpModel& model) override;

 private:
  std::string exe_;
};

/// Name from options.solver; path from options.solver_path, then MGRESTORE_SOLVER_PATH, then the build default.
std::unique_ptr<SolverAdapter> make_adapter(const SolveOptions& options);

bool adapter_available(const std::string& solver);

/// Writes the LP, runs the adapter, reads and checks the assignment.
SolveResult solve(const MilpModel& model, const SolveOptions& options, SolverAdapter& adapter);
SolveResult solve(const MilpModel& model, const SolveOptions& options);
SolveResult solve(const RestorationProblem& problem, const SolveOptions& options, SolverAdapter& adapter);

}  // namespace mgrestore
