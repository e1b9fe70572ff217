#pragma once

#include <string>
#include <vector>

#include "mgrestore/feeder_model.hpp"
#include "mgrestore/solver_interface.hpp"

namespace mgrestore {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitInfeasible = 3,
  kExitSolver = 4,
  kExitAudit = 5,
};

enum class SweepParameter { NondispatchableCapacityFactor, DrLowerBoundFactor, NSteps };

struct SweepSpec {
  SweepParameter parameter = SweepParameter::NSteps;
  std::vector<double> values;
  std::string feeder;    // resolved relative to the spec file
  std::string scenario;  // empty: defaults
};

std::string to_string(SweepParameter p);
/// Throws FeederError on unknown parameters, empty value lists or values outside the parameter's domain.
SweepSpec parse_sweep_spec(std::string_view text, const std::string& base_dir = "");
SweepSpec load_sweep_spec(const std::string& path);

/// Scales forecasts and limits of non-dispatchable units.
FeederModel scale_nondispatchable(const FeederModel& feeder, double factor);
/// Sets every DR load's lower fraction to `factor` times its upper fraction.
FeederModel set_dr_lower_bound(const FeederModel& feeder, double factor);

struct SweepRow {
  double value = 0.0;
  double objective_kw = 0.0;  // served energy, kW times the step interval
  std::string status;
  std::size_t variables = 0;
  std::size_t binaries = 0;
  std::size_t constraints = 0;
  double wall_time = 0.0;
  double gap = 0.0;
  bool audit_pass = false;
  std::string message;
};

/// Solves one point per value, up to `jobs` at a time. Point failures are recorded, never thrown.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const FeederModel& feeder, const ScenarioConfig& base,
                                const SolveOptions& options, int jobs);
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Entry point of the command-line tool; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace mgrestore
