#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mgrestore {

class MilpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using VarId = int;

enum class VarType { Continuous, Binary };
enum class Sense { LessEqual, Equal, GreaterEqual };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  VarType type = VarType::Continuous;
};

struct LinExpr {
  std::vector<std::pair<VarId, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  LinExpr(double c) : constant(c) {}  // NOLINT: implicit constant
  static LinExpr var(VarId v, double coef = 1.0) {
    LinExpr e;
    e.terms.emplace_back(v, coef);
    return e;
  }

  LinExpr& add(VarId v, double coef) {
    if (coef != 0.0) terms.emplace_back(v, coef);
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double k);
  double evaluate(const std::vector<double>& values) const;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double k, LinExpr a);

struct Constraint {
  std::string name;
  std::vector<std::pair<VarId, double>> terms;  // merged, sorted by variable, no zeros
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
  std::string tag;  // constraint family
};

/// A constraint row whose slack is governed by a big-M constant.
struct BigMRecord {
  std::size_t row = 0;
  std::string family;
  double m = 0.0;
  double required = 0.0;  // sup of |a - b| over the variable box
};

class MilpModel {
 public:
  VarId add_variable(const std::string& name, double lower, double upper, VarType type);
  VarId add_binary(const std::string& name) { return add_variable(name, 0.0, 1.0, VarType::Binary); }
  VarId add_continuous(const std::string& name, double lower, double upper) {
    return add_variable(name, lower, upper, VarType::Continuous);
  }

  /// Moves the expression constant to the right side and merges repeated variables.
  /// Returns the row index, or -1 for a row with no variables that holds trivially.
  int add_constraint(const std::string& name, const LinExpr& lhs, Sense sense, double rhs, const std::string& tag);
  void set_objective(const LinExpr& objective);
  void set_bounds(VarId v, double lower, double upper);
  void record_big_m(BigMRecord r) { big_m_.push_back(std::move(r)); }

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const std::vector<std::pair<VarId, double>>& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }
  const std::vector<BigMRecord>& big_m_records() const { return big_m_; }
  const Variable& variable(VarId v) const { return vars_.at(static_cast<std::size_t>(v)); }
  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_constraints() const { return rows_.size(); }
  std::size_t num_binaries() const;

  /// -1 when absent.
  VarId find(std::string_view name) const;

  /// Interval of an expression over the variable box.
  std::pair<double, double> bounds_of(const LinExpr& e) const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::vector<std::pair<VarId, double>> objective_;
  double objective_constant_ = 0.0;
  std::unordered_map<std::string, VarId> by_name_;
  std::unordered_map<std::string, std::size_t> row_names_;
  std::vector<BigMRecord> big_m_;
};

/// w = x * v for binary x and bounded continuous v, by the four McCormick rows.
VarId link_binary_product(MilpModel& model, VarId x, VarId v, const std::string& name, const std::string& tag);

/// a - b <= M (1 - trigger) and b - a <= M (1 - trigger). The record keeps the bound-derived requirement.
void freeze_if(MilpModel& model, const LinExpr& trigger, const LinExpr& a, const LinExpr& b, double big_m,
               const std::string& name, const std::string& tag);

/// Rows whose M is below the supremum it must cover.
std::vector<std::string> audit_big_m(const MilpModel& model);

bool valid_lp_name(std::string_view name);

/// CPLEX LP text. Deterministic; numbers printed with 17 significant digits.
std::string export_lp(const MilpModel& model);
MilpModel parse_lp(std::string_view text);

struct SolvedModel {
  std::vector<double> values;
  std::vector<double> violation;  // per row, >= 0
  std::vector<VarId> integrality_violations;
  double max_violation = 0.0;
  std::size_t worst_row = 0;
  double objective = 0.0;
};

/// Values by name; every variable must be covered and lie within bounds (tolerance `bound_tol`).
SolvedModel apply_solution(const MilpModel& model, const std::unordered_map<std::string, double>& assignment,
                           double integrality_tol = 1e-6, double bound_tol = 1e-6);
SolvedModel apply_solution(const MilpModel& model, const std::vector<double>& values, double integrality_tol = 1e-6,
                           double bound_tol = 1e-6);

/// `name value` lines, one per variable, in model order.
std::string format_assignment(const MilpModel& model, const std::vector<double>& values);

}  // namespace mgrestore
