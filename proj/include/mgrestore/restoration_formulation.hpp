#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mgrestore/feeder_model.hpp"
#include "mgrestore/graph_analysis.hpp"
#include "mgrestore/milp_core.hpp"
#include "mgrestore/network_matrices.hpp"
#include "mgrestore/powerflow_linearization.hpp"

namespace mgrestore {

class FormulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (symbol, element, phase, step) of a model variable. Phase is '-' when not phase-indexed,
/// step is 0 when not step-indexed.
struct VarKey {
  std::string symbol;
  std::string element;
  char phase = '-';
  int step = 0;

  auto operator<=>(const VarKey&) const = default;
  std::string to_string() const;
};

class VariableIndex {
 public:
  void insert(const VarKey& key, VarId id);
  std::optional<VarId> find(const VarKey& key) const;
  VarId at(const VarKey& key) const;
  VarId at(const std::string& symbol, const std::string& element, char phase, int step) const {
    return at(VarKey{symbol, element, phase, step});
  }
  const VarKey& key_of(VarId id) const { return keys_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return by_key_.size(); }
  const std::map<VarKey, VarId>& entries() const { return by_key_; }

 private:
  std::map<VarKey, VarId> by_key_;
  std::vector<VarKey> keys_;
};

/// Symbols used for keys and variable names.
namespace sym {
inline constexpr const char* kNode = "xN";
inline constexpr const char* kBlock = "xK";
inline constexpr const char* kBlockLink = "xKS";
inline constexpr const char* kDg = "xG";
inline constexpr const char* kBranch = "xBR";
inline constexpr const char* kLoad = "xL";
inline constexpr const char* kVre = "Vre";
inline constexpr const char* kVim = "Vim";
inline constexpr const char* kDVre = "dVre";
inline constexpr const char* kDVim = "dVim";
inline constexpr const char* kWBre = "wBre";
inline constexpr const char* kWBim = "wBim";
inline constexpr const char* kWLre = "wLre";
inline constexpr const char* kWLim = "wLim";
inline constexpr const char* kPref = "Pref";
inline constexpr const char* kQref = "Qref";
inline constexpr const char* kPdg = "Pdg";
inline constexpr const char* kQdg = "Qdg";
inline constexpr const char* kPload = "PL";
inline constexpr const char* kQload = "QL";
inline constexpr const char* kReach = "zR";
inline constexpr const char* kIre = "Ire";
inline constexpr const char* kIim = "Iim";
}  // namespace sym

struct RestorationProblem {
  MilpModel model;
  VariableIndex index;
  FeederModel feeder;  // per unit
  ScenarioConfig config;
  int n_steps = 0;
  BusBlockGraph blocks;
  std::vector<std::pair<int, int>> block_links;  // distinct block pairs joined by switches
  double objective_scale_kw = 1.0;                // kW per pu power

  /// Rows per constraint family.
  std::map<std::string, std::size_t> family_counts() const;
  /// Text table: constraint name and its family tag.
  std::string provenance_report() const;
};

/// Builds the sequential restoration model. Call the build_* steps in order, or use assemble().
class RestorationBuilder {
 public:
  /// `feeder` may be physical or per unit; `n_steps` must be at least 1.
  RestorationBuilder(const FeederModel& feeder, const ScenarioConfig& config, int n_steps);

  void build_objective();
  void build_initial_sequencing();
  void build_connectivity();
  void build_power_flow();
  void build_der_constraints();
  void build_demand_response();
  void build_unbalance();

  RestorationProblem take() { return std::move(p_); }
  const RestorationProblem& problem() const { return p_; }

 private:
  VarId var(const char* symbol, const std::string& element, char phase, int step) const {
    return p_.index.at(symbol, element, phase, step);
  }
  VarId add(const char* symbol, const std::string& element, char phase, int step, double lo, double hi, VarType type);
  void declare_variables();
  LinExpr dg_total(std::size_t g, bool reactive, int t) const;
  LinExpr load_phase_power(std::size_t l, Phase p, int t) const;

  RestorationProblem p_;
  std::vector<bool> intact_dg_, intact_load_;
};

/// Resolves n_steps (0 means the generous estimate) and runs every builder.
RestorationProblem assemble(const FeederModel& feeder, const ScenarioConfig& config);

std::string block_name(int block);

}  // namespace mgrestore
