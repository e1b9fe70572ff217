#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "mgrestore/phase.hpp"

namespace mgrestore {

using Matrix3c = Eigen::Matrix3cd;

/// Raised when a feeder or scenario document cannot be turned into a model.
/// `path()` is a JSON-pointer-like location of the offending value.
class FeederError : public std::runtime_error {
 public:
  FeederError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class Units { Physical, PerUnit };

struct PerUnitBase {
  double mva_per_phase = 1.0;
  double kv_ln = 1.0;

  double kva_per_phase() const { return mva_per_phase * 1000.0; }
  double z_ohm(double kv) const { return kv * kv / mva_per_phase; }
  double i_amp(double kv) const { return mva_per_phase * 1000.0 / kv; }
};

struct Node {
  std::string id;
  PhaseSet phases;
  double base_kv = 0.0;
};

struct Branch {
  std::string id;
  std::string from;
  std::string to;
  PhaseSet phases;
  bool switchable = false;
  bool damaged = false;
  Matrix3c impedance = Matrix3c::Zero();        // ohm (pu after to_per_unit)
  Matrix3c shunt_admittance = Matrix3c::Zero(); // siemens (pu after to_per_unit)
  PhaseValues ampacity{0.0, 0.0, 0.0};          // amps, 0 means unmonitored
};

enum class DerKind { Droop, PqDispatchable, PqNondispatchable };

std::string_view to_string(DerKind kind);
std::optional<DerKind> der_kind_from_string(std::string_view s);

struct Der {
  std::string id;
  std::string node;
  DerKind kind = DerKind::Droop;
  bool black_start = false;
  bool damaged = false;
  PhaseSet phases;
  double p_min = 0.0;  // kW, three-phase total
  double p_max = 0.0;
  double q_min = 0.0;  // kVAr
  double q_max = 0.0;
  double ramp_fraction = 1.0;
  double base_mva_per_phase = 0.0;  // 0 when not given
  double base_kv = 0.0;
  double coupling_inductor_pu = 0.0;
  // Per-step, per-phase forecast; a single entry applies to every step.
  std::vector<PhaseValues> forecast_p;
  std::vector<PhaseValues> forecast_q;

  PhaseValues forecast_p_at(int step) const;  // step is 1-based
  PhaseValues forecast_q_at(int step) const;
};

struct ZipCoefficients {
  double z = 0.0;
  double i = 0.0;
  double p = 1.0;
};

struct Load {
  std::string id;
  std::string node;
  PhaseSet phases;
  PhaseValues p{0.0, 0.0, 0.0};  // kW per phase
  PhaseValues q{0.0, 0.0, 0.0};  // kVAr per phase
  ZipCoefficients zip;
  bool switchable = true;
  bool controllable_dr = false;
  bool damaged = false;
  double dr_min_fraction = 0.0;
  double dr_max_fraction = 1.0;
  // Optional per-step multipliers of the nominal demand; empty means constant.
  std::vector<double> profile;

  double multiplier_at(int step) const;  // step is 1-based
  bool is_switchable() const { return switchable || controllable_dr; }
};

struct FeederModel {
  std::string name;
  std::string notes;
  double base_frequency = 60.0;  // Hz
  double step_interval = 1.0;    // time between restoration steps
  PerUnitBase base;
  Units units = Units::Physical;
  std::vector<Node> nodes;
  std::vector<Branch> branches;
  std::vector<Der> ders;
  std::vector<Load> loads;

  std::optional<std::size_t> find_node(std::string_view id) const;
  const Node& node(std::string_view id) const;  // throws FeederError when absent
  std::unordered_map<std::string, std::size_t> node_lookup() const;
};

struct ValidationIssue {
  std::string path;
  std::string rule;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

/// Parses a feeder document (see docs/feeder_format.md). Unknown fields are rejected.
FeederModel parse_feeder(std::string_view text);
FeederModel load_feeder_file(const std::string& path);
std::string serialize_feeder(const FeederModel& model);

ValidationReport validate(const FeederModel& model);

FeederModel to_per_unit(const FeederModel& model);
FeederModel to_physical(const FeederModel& model);

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

struct ScenarioConfig {
  std::optional<int> n_steps;  // unset: use the generous step estimate
  double big_m_override = 0.0;  // 0: derive every M from variable bounds
  int polygon_sides = 12;
  double v_min = 0.95;
  double v_max = 1.05;
  double angle_deviation_limit_deg = 15.0;
  double load_unbalance_limit = kUnlimited;
  double dg_phase_unbalance_limit = kUnlimited;
  double optimality_gap = 0.01;
  double solver_time_limit = 600.0;
  bool enforce_ampacity = false;
  bool include_shunts = false;
  double integrality_tolerance = 1e-6;
  double residual_tolerance = 1e-6;
};

ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario_file(const std::string& path);
std::string serialize_scenario(const ScenarioConfig& config);
/// Invariant violations of a scenario; empty when usable.
std::vector<std::string> check_scenario(const ScenarioConfig& config);

std::string read_text_file(const std::string& path);

}  // namespace mgrestore
