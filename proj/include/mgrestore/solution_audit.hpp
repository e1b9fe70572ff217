#pragma once

#include <array>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgrestore/feeder_model.hpp"

namespace mgrestore {

struct RestorationProblem;

class AuditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// State of the network at one restoration step. Element vectors follow feeder order; powers and
/// voltages are per unit.
struct PlanStep {
  int t = 0;
  std::vector<bool> node_on, block_on, branch_on, dg_on, load_on;
  std::vector<std::array<std::complex<double>, 3>> voltage;  // per node
  std::vector<PhaseValues> dg_p, dg_q;                       // per DG
  std::vector<PhaseValues> load_p, load_q;                   // served, per load
  PhaseValues restored_p{}, restored_q{};
  PhaseValues dispatch_p{}, dispatch_q{};
};

struct RestorationPlan {
  std::string feeder;
  double kva_per_phase = 1.0;
  double step_interval = 1.0;
  std::vector<std::string> node_ids, branch_ids, der_ids, load_ids;
  std::vector<bool> branch_switchable;
  std::vector<std::vector<std::string>> blocks;  // node ids per block
  std::vector<PlanStep> steps;
  double max_integrality_deviation = 0.0;

  int n_steps() const { return static_cast<int>(steps.size()); }
  /// Served energy, kW times the step interval.
  double served_energy_kw() const;
  /// Recomputes the per-step totals from the member values.
  void refresh_totals();
};

/// Plan from a complete assignment in model order. Binaries must be within `integrality_tol` of 0 or 1.
RestorationPlan extract_plan(const RestorationProblem& problem, const std::vector<double>& values,
                             double integrality_tol = 1e-6);

struct FamilyResult {
  std::size_t checked = 0;
  double max_residual = 0.0;
  std::size_t violation_count = 0;
  std::vector<std::string> violations;  // first few, with element and step
};

/// Restored totals around a step in which a droop unit joins.
struct SyncCheck {
  int t = 0;
  std::string dg;
  double kw_before = 0.0, kw_after = 0.0;
  double kvar_before = 0.0, kvar_after = 0.0;
  bool unchanged = false;
};

struct AuditReport {
  double tolerance = 1e-6;
  std::map<std::string, FamilyResult> families;
  std::vector<SyncCheck> sync_steps;
  double max_linear_residual = 0.0;
  double exact_zip_residual = 0.0;  // informational
  double served_energy_kw = 0.0;

  bool pass() const;
  std::vector<std::string> failed_families() const;
};

/// Re-evaluates every restoration rule on the plan from the feeder data alone.
AuditReport audit(const RestorationPlan& plan, const FeederModel& feeder, const ScenarioConfig& config);

/// Per step and phase (a, b, c, total): restored and dispatched kW/kVAr, switches closed at that step.
std::string summarize(const RestorationPlan& plan);

std::string audit_report_json(const AuditReport& report);
std::string plan_to_json(const RestorationPlan& plan);
RestorationPlan plan_from_json(std::string_view text);

}  // namespace mgrestore
