#include "mgrestore/milp_core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace mgrestore {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::pair<VarId, double>> merge_terms(std::vector<std::pair<VarId, double>> terms) {
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<VarId, double>> out;
  for (const auto& [v, c] : terms) {
    if (!out.empty() && out.back().first == v)
      out.back().second += c;
    else
      out.emplace_back(v, c);
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const auto& t) { return t.second == 0.0; }), out.end());
  return out;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  for (const auto& [v, c] : o.terms) terms.emplace_back(v, -c);
  constant -= o.constant;
  return *this;
}

LinExpr& LinExpr::operator*=(double k) {
  for (auto& t : terms) t.second *= k;
  constant *= k;
  return *this;
}

double LinExpr::evaluate(const std::vector<double>& values) const {
  double s = constant;
  for (const auto& [v, c] : terms) s += c * values.at(static_cast<std::size_t>(v));
  return s;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double k, LinExpr a) { return a *= k; }

bool valid_lp_name(std::string_view name) {
  if (name.empty() || name.size() > 255) return false;
  const char c0 = name.front();
  if (!(std::isalpha(static_cast<unsigned char>(c0)) || c0 == '_')) return false;
  if (c0 == 'e' || c0 == 'E') return false;  // reads as an exponent in some parsers
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  static const char* reserved[] = {"free", "inf", "infinity", "st", "s.t.", "end", "bounds", "binary", "binaries",
                                   "bin", "general", "generals", "gen", "minimize", "maximize", "min", "max",
                                   "subject", "to", "such", "that", "semi", "semis", "minimum", "maximum"};
  const std::string l = lower(name);
  for (const char* r : reserved)
    if (l == r) return false;
  return true;
}

VarId MilpModel::add_variable(const std::string& name, double lower, double upper, VarType type) {
  if (!valid_lp_name(name)) throw MilpError("invalid variable name '" + name + "'");
  if (by_name_.count(name)) throw MilpError("duplicate variable name '" + name + "'");
  if (std::isnan(lower) || std::isnan(upper) || lower > upper)
    throw MilpError("variable '" + name + "' has empty bounds [" + fmt(lower) + ", " + fmt(upper) + "]");
  if (type == VarType::Binary && (lower < 0.0 || upper > 1.0))
    throw MilpError("binary variable '" + name + "' must have bounds within [0, 1]");
  const auto id = static_cast<VarId>(vars_.size());
  vars_.push_back({name, lower, upper, type});
  by_name_.emplace(name, id);
  return id;
}

void MilpModel::set_bounds(VarId v, double lower, double upper) {
  auto& var = vars_.at(static_cast<std::size_t>(v));
  if (lower > upper) throw MilpError("variable '" + var.name + "' given empty bounds");
  var.lower = lower;
  var.upper = upper;
}

int MilpModel::add_constraint(const std::string& name, const LinExpr& lhs, Sense sense, double rhs,
                              const std::string& tag) {
  if (!valid_lp_name(name)) throw MilpError("invalid constraint name '" + name + "'");
  if (row_names_.count(name)) throw MilpError("duplicate constraint name '" + name + "'");
  for (const auto& [v, c] : lhs.terms) {
    if (v < 0 || static_cast<std::size_t>(v) >= vars_.size())
      throw MilpError("constraint '" + name + "' references an undeclared variable");
    if (!std::isfinite(c)) throw MilpError("constraint '" + name + "' has a non-finite coefficient");
  }
  Constraint row{name, merge_terms(lhs.terms), sense, rhs - lhs.constant, tag};
  if (!std::isfinite(row.rhs)) throw MilpError("constraint '" + name + "' has a non-finite right side");
  if (row.terms.empty()) {
    const double r = row.rhs;
    const bool ok = sense == Sense::LessEqual ? 0.0 <= r + 1e-12
                    : sense == Sense::GreaterEqual ? 0.0 >= r - 1e-12
                                                    : std::abs(r) <= 1e-12;
    if (!ok) throw MilpError("constraint '" + name + "' has no variables and cannot hold");
    return -1;
  }
  row_names_.emplace(name, rows_.size());
  rows_.push_back(std::move(row));
  return static_cast<int>(rows_.size() - 1);
}

void MilpModel::set_objective(const LinExpr& objective) {
  objective_ = merge_terms(objective.terms);
  objective_constant_ = objective.constant;
}

std::size_t MilpModel::num_binaries() const {
  return static_cast<std::size_t>(
      std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) { return v.type == VarType::Binary; }));
}

VarId MilpModel::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? -1 : it->second;
}

std::pair<double, double> MilpModel::bounds_of(const LinExpr& e) const {
  double lo = e.constant, hi = e.constant;
  for (const auto& [v, c] : e.terms) {
    const auto& var = variable(v);
    if (c > 0) {
      lo += c * var.lower;
      hi += c * var.upper;
    } else {
      lo += c * var.upper;
      hi += c * var.lower;
    }
  }
  return {lo, hi};
}

VarId link_binary_product(MilpModel& model, VarId x, VarId v, const std::string& name, const std::string& tag) {
  const Variable& xv = model.variable(x);
  if (xv.type != VarType::Binary) throw MilpError("'" + xv.name + "' is not binary");
  const double lo = model.variable(v).lower, hi = model.variable(v).upper;
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw MilpError("product with '" + model.variable(v).name + "' needs finite bounds");
  const VarId w = model.add_continuous(name, std::min(lo, 0.0), std::max(hi, 0.0));
  using E = LinExpr;
  // w <= hi x ; w >= lo x ; w <= v - lo (1 - x) ; w >= v - hi (1 - x)
  model.add_constraint(name + "_u1", E::var(w) - E::var(x, hi), Sense::LessEqual, 0.0, tag);
  model.add_constraint(name + "_l1", E::var(w) - E::var(x, lo), Sense::GreaterEqual, 0.0, tag);
  model.add_constraint(name + "_u2", E::var(w) - E::var(v) - E::var(x, lo), Sense::LessEqual, -lo, tag);
  model.add_constraint(name + "_l2", E::var(w) - E::var(v) - E::var(x, hi), Sense::GreaterEqual, -hi, tag);
  return w;
}

void freeze_if(MilpModel& model, const LinExpr& trigger, const LinExpr& a, const LinExpr& b, double big_m,
               const std::string& name, const std::string& tag) {
  if (!(big_m > 0.0) || !std::isfinite(big_m)) throw MilpError("freeze '" + name + "' needs a positive finite M");
  const LinExpr diff = a - b;
  auto [lo, hi] = model.bounds_of(diff);
  const double required = std::max(std::abs(lo), std::abs(hi));
  // a - b + M trigger <= M ; b - a + M trigger <= M
  const int up = model.add_constraint(name + "_u", diff + big_m * trigger, Sense::LessEqual, big_m, tag);
  const int dn = model.add_constraint(name + "_d", (-1.0) * diff + big_m * trigger, Sense::LessEqual, big_m, tag);
  for (int r : {up, dn})
    if (r >= 0) model.record_big_m({static_cast<std::size_t>(r), tag, big_m, required});
}

std::vector<std::string> audit_big_m(const MilpModel& model) {
  std::vector<std::string> out;
  for (const auto& r : model.big_m_records()) {
    if (r.m + 1e-9 * std::max(1.0, r.required) < r.required) {
      std::ostringstream os;
      os << model.constraints().at(r.row).name << ": M = " << r.m << " below required " << r.required;
      out.push_back(os.str());
    }
  }
  return out;
}

namespace {

void append_terms(std::ostringstream& os, const std::vector<std::pair<VarId, double>>& terms, const MilpModel& m,
                  std::size_t start_width) {
  std::size_t width = start_width;
  bool first = true;
  for (const auto& [v, c] : terms) {
    std::string piece = (c < 0 ? " - " : (first ? " " : " + ")) + fmt(std::abs(c)) + " " + m.variable(v).name;
    if (width + piece.size() > 200) {
      os << "\n  ";
      width = 2;
    }
    os << piece;
    width += piece.size();
    first = false;
  }
}

const char* sense_text(Sense s) {
  switch (s) {
    case Sense::LessEqual: return "<=";
    case Sense::GreaterEqual: return ">=";
    case Sense::Equal: return "=";
  }
  return "=";
}

}  // namespace

std::string export_lp(const MilpModel& model) {
  std::ostringstream os;
  os << "\\ " << model.num_variables() << " variables, " << model.num_constraints() << " constraints\n";
  os << "Minimize\n obj:";
  if (model.objective().empty() && model.num_variables() > 0)
    os << " 0 " << model.variable(0).name;
  else
    append_terms(os, model.objective(), model, 5);
  os << "\nSubject To\n";
  for (const auto& row : model.constraints()) {
    os << ' ' << row.name << ':';
    append_terms(os, row.terms, model, row.name.size() + 2);
    os << ' ' << sense_text(row.sense) << ' ' << fmt(row.rhs) << '\n';
  }
  os << "Bounds\n";
  for (const auto& v : model.variables()) {
    if (std::isinf(v.lower) && std::isinf(v.upper))
      os << ' ' << v.name << " free\n";
    else if (v.lower == v.upper)
      os << ' ' << v.name << " = " << fmt(v.lower) << '\n';
    else
      os << ' ' << fmt(v.lower) << " <= " << v.name << " <= " << fmt(v.upper) << '\n';
  }
  bool any_binary = false;
  for (const auto& v : model.variables()) {
    if (v.type != VarType::Binary) continue;
    if (!any_binary) os << "Binary\n";
    any_binary = true;
    os << ' ' << v.name << '\n';
  }
  os << "End\n";
  return os.str();
}

namespace {

enum class Section { None, Objective, Constraints, Bounds, Binary, General, Done };

struct Token {
  enum Kind { Name, Number, Op, Colon, Sign } kind;
  std::string text;
  double value = 0.0;
  int line = 0;
};

bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || std::strchr("_.!\"#$%&()/,;?@`'{}|~[]", c) != nullptr;
}

std::vector<Token> tokenize(std::string_view line, int lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '\\') {
      break;
    } else if (c == ':') {
      out.push_back({Token::Colon, ":", 0.0, lineno});
      ++i;
    } else if (c == '+' || c == '-') {
      out.push_back({Token::Sign, std::string(1, c), 0.0, lineno});
      ++i;
    } else if (c == '<' || c == '>' || c == '=') {
      std::string op(1, c);
      ++i;
      if (i < line.size() && line[i] == '=') {
        op.push_back('=');
        ++i;
      }
      if (op == "=<") op = "<=";
      if (op == "=>") op = ">=";
      if (op == "<") op = "<=";
      if (op == ">") op = ">=";
      out.push_back({Token::Op, op, 0.0, lineno});
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      std::size_t j = i;
      while (j < line.size() && (std::isdigit(static_cast<unsigned char>(line[j])) || line[j] == '.')) ++j;
      if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
        if (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) {
          j = k;
          while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        }
      }
      std::string text(line.substr(i, j - i));
      out.push_back({Token::Number, text, std::stod(text), lineno});
      i = j;
    } else if (name_char(c)) {
      std::size_t j = i;
      while (j < line.size() && name_char(line[j])) ++j;
      std::string text(line.substr(i, j - i));
      const std::string l = lower(text);
      if (l == "inf" || l == "infinity")
        out.push_back({Token::Number, text, kInf, lineno});
      else
        out.push_back({Token::Name, text, 0.0, lineno});
      i = j;
    } else {
      throw MilpError("LP line " + std::to_string(lineno) + ": unexpected character '" + std::string(1, c) + "'");
    }
  }
  return out;
}

struct LpBuilder {
  MilpModel model;
  std::map<std::string, VarId> declared;
  std::vector<std::string> order;
  std::map<std::string, std::pair<double, double>> bounds;
  std::vector<std::string> binaries;

  struct PendingRow {
    std::string name;
    std::vector<std::pair<std::string, double>> terms;
    Sense sense;
    double rhs;
  };
  std::vector<PendingRow> rows;
  std::vector<std::pair<std::string, double>> objective;
  bool maximize = false;

  void note(const std::string& name) {
    if (!declared.count(name)) {
      declared.emplace(name, -1);
      order.push_back(name);
    }
  }
};

[[noreturn]] void lp_error(int line, const std::string& what) {
  throw MilpError("LP line " + std::to_string(line) + ": " + what);
}

/// Parses "[name:] terms [op rhs]" from tokens[pos..]; returns terms and advances pos.
std::vector<std::pair<std::string, double>> parse_terms(const std::vector<Token>& t, std::size_t& pos) {
  std::vector<std::pair<std::string, double>> out;
  while (pos < t.size() && t[pos].kind != Token::Op) {
    double sign = 1.0;
    while (pos < t.size() && t[pos].kind == Token::Sign) {
      if (t[pos].text == "-") sign = -sign;
      ++pos;
    }
    if (pos >= t.size()) lp_error(t.back().line, "dangling sign");
    double coef = 1.0;
    if (t[pos].kind == Token::Number) {
      coef = t[pos].value;
      ++pos;
      if (pos >= t.size() || t[pos].kind != Token::Name) {
        // bare constant in an expression: only allowed as 0 with no variable in objectives
        if (coef == 0.0) continue;
        lp_error(t[pos - 1].line, "constant terms are not supported");
      }
    }
    if (t[pos].kind != Token::Name) lp_error(t[pos].line, "expected a variable name, got '" + t[pos].text + "'");
    out.emplace_back(t[pos].text, sign * coef);
    ++pos;
  }
  return out;
}

}  // namespace

MilpModel parse_lp(std::string_view text) {
  LpBuilder b;
  Section section = Section::None;
  std::vector<Token> pending;  // tokens of a statement spanning lines
  int lineno = 0;
  std::istringstream in{std::string(text)};
  std::string line;

  auto header = [&](const std::vector<Token>& tk) -> std::optional<Section> {
    if (tk.empty() || tk[0].kind != Token::Name) return std::nullopt;
    std::string w = lower(tk[0].text);
    if (tk.size() == 1) {
      if (w == "minimize" || w == "minimise" || w == "minimum" || w == "min") return Section::Objective;
      if (w == "maximize" || w == "maximise" || w == "maximum" || w == "max") {
        b.maximize = true;
        return Section::Objective;
      }
      if (w == "st" || w == "s.t." || w == "st.") return Section::Constraints;
      if (w == "bounds" || w == "bound") return Section::Bounds;
      if (w == "binary" || w == "binaries" || w == "bin") return Section::Binary;
      if (w == "general" || w == "generals" || w == "gen") return Section::General;
      if (w == "end") return Section::Done;
    }
    if (tk.size() == 2 && tk[1].kind == Token::Name) {
      std::string w2 = lower(tk[1].text);
      if (w == "subject" && w2 == "to") return Section::Constraints;
      if (w == "such" && w2 == "that") return Section::Constraints;
    }
    return std::nullopt;
  };

  auto flush_objective = [&]() {
    if (pending.empty()) return;
    std::size_t pos = 0;
    if (pending.size() >= 2 && pending[0].kind == Token::Name && pending[1].kind == Token::Colon) pos = 2;
    auto terms = parse_terms(pending, pos);
    if (pos != pending.size()) lp_error(pending[pos].line, "unexpected token in objective");
    for (auto& [n, c] : terms) {
      b.note(n);
      b.objective.emplace_back(n, c);
    }
    pending.clear();
  };

  // A constraint is complete once an operator and a right-hand number have been seen.
  auto try_flush_constraint = [&]() {
    auto op = std::find_if(pending.begin(), pending.end(), [](const Token& t) { return t.kind == Token::Op; });
    if (op == pending.end()) return;
    std::size_t after = static_cast<std::size_t>(op - pending.begin()) + 1;
    double sign = 1.0;
    while (after < pending.size() && pending[after].kind == Token::Sign) {
      if (pending[after].text == "-") sign = -sign;
      ++after;
    }
    if (after >= pending.size()) return;
    if (pending[after].kind != Token::Number) lp_error(pending[after].line, "expected a right-hand side number");
    if (after + 1 != pending.size()) lp_error(pending[after].line, "trailing tokens after constraint");
    std::size_t pos = 0;
    std::string name = "R" + std::to_string(b.rows.size() + 1);
    if (pending.size() >= 2 && pending[0].kind == Token::Name && pending[1].kind == Token::Colon) {
      name = pending[0].text;
      pos = 2;
    }
    auto terms = parse_terms(pending, pos);
    const std::string& o = op->text;
    Sense s = o == "<=" ? Sense::LessEqual : o == ">=" ? Sense::GreaterEqual : Sense::Equal;
    for (auto& [n, c] : terms) b.note(n);
    b.rows.push_back({name, terms, s, sign * pending[after].value});
    pending.clear();
  };

  auto parse_bound = [&](const std::vector<Token>& tk) {
    std::vector<Token> t;
    // fold signs into numbers
    for (std::size_t i = 0; i < tk.size(); ++i) {
      if (tk[i].kind == Token::Sign && i + 1 < tk.size() && tk[i + 1].kind == Token::Number) {
        Token n = tk[i + 1];
        if (tk[i].text == "-") n.value = -n.value;
        t.push_back(n);
        ++i;
      } else {
        t.push_back(tk[i]);
      }
    }
    const int ln = t.front().line;
    auto set = [&](const std::string& name, std::optional<double> lo, std::optional<double> hi) {
      b.note(name);
      auto& bd = b.bounds.try_emplace(name, 0.0, kInf).first->second;
      if (lo) bd.first = *lo;
      if (hi) bd.second = *hi;
    };
    if (t.size() == 2 && t[0].kind == Token::Name && t[1].kind == Token::Name && lower(t[1].text) == "free") {
      set(t[0].text, -kInf, kInf);
    } else if (t.size() == 3 && t[0].kind == Token::Name && t[1].kind == Token::Op && t[2].kind == Token::Number) {
      const auto& op = t[1].text;
      if (op == "<=") set(t[0].text, std::nullopt, t[2].value);
      else if (op == ">=") set(t[0].text, t[2].value, std::nullopt);
      else set(t[0].text, t[2].value, t[2].value);
    } else if (t.size() == 3 && t[0].kind == Token::Number && t[1].kind == Token::Op && t[2].kind == Token::Name) {
      const auto& op = t[1].text;
      if (op == "<=") set(t[2].text, t[0].value, std::nullopt);
      else if (op == ">=") set(t[2].text, std::nullopt, t[0].value);
      else set(t[2].text, t[0].value, t[0].value);
    } else if (t.size() == 5 && t[0].kind == Token::Number && t[1].kind == Token::Op && t[2].kind == Token::Name &&
               t[3].kind == Token::Op && t[4].kind == Token::Number && t[1].text == "<=" && t[3].text == "<=") {
      set(t[2].text, t[0].value, t[4].value);
    } else {
      lp_error(ln, "unrecognised bound statement");
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    auto tk = tokenize(line, lineno);
    if (tk.empty()) continue;
    if (auto s = header(tk)) {
      if (section == Section::Objective) flush_objective();
      if (section == Section::Constraints && !pending.empty()) lp_error(lineno, "incomplete constraint");
      section = *s;
      if (section == Section::Done) break;
      continue;
    }
    switch (section) {
      case Section::None:
        lp_error(lineno, "content before the objective section");
      case Section::Objective:
        pending.insert(pending.end(), tk.begin(), tk.end());
        break;
      case Section::Constraints:
        pending.insert(pending.end(), tk.begin(), tk.end());
        try_flush_constraint();
        break;
      case Section::Bounds:
        parse_bound(tk);
        break;
      case Section::Binary:
        for (const auto& t : tk) {
          if (t.kind != Token::Name) lp_error(lineno, "expected variable names");
          b.note(t.text);
          b.binaries.push_back(t.text);
        }
        break;
      case Section::General:
        lp_error(lineno, "general integer variables are not supported");
      case Section::Done:
        break;
    }
  }
  if (section == Section::Objective) flush_objective();
  if (!pending.empty()) lp_error(lineno, "incomplete statement at end of file");
  if (section != Section::Done) lp_error(lineno, "missing End");

  MilpModel m;
  std::map<std::string, bool> is_binary;
  for (const auto& n : b.binaries) is_binary[n] = true;
  for (const auto& name : b.order) {
    auto bd = b.bounds.count(name) ? b.bounds.at(name) : std::pair<double, double>(0.0, kInf);
    VarType type = VarType::Continuous;
    if (is_binary.count(name)) {
      type = VarType::Binary;
      if (!b.bounds.count(name)) bd = {0.0, 1.0};
      bd.first = std::max(bd.first, 0.0);
      bd.second = std::min(bd.second, 1.0);
    }
    b.declared[name] = m.add_variable(name, bd.first, bd.second, type);
  }
  LinExpr obj;
  for (const auto& [n, c] : b.objective) obj.add(b.declared.at(n), b.maximize ? -c : c);
  m.set_objective(obj);
  for (const auto& r : b.rows) {
    LinExpr e;
    for (const auto& [n, c] : r.terms) e.add(b.declared.at(n), c);
    m.add_constraint(r.name, e, r.sense, r.rhs, "");
  }
  return m;
}

SolvedModel apply_solution(const MilpModel& model, const std::vector<double>& values, double integrality_tol,
                           double bound_tol) {
  if (values.size() != model.num_variables())
    throw MilpError("assignment has " + std::to_string(values.size()) + " values for " +
                    std::to_string(model.num_variables()) + " variables");
  SolvedModel s;
  s.values = values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& v = model.variables()[i];
    const double x = values[i];
    if (!std::isfinite(x)) throw MilpError("variable '" + v.name + "' has a non-finite value");
    if (x < v.lower - bound_tol || x > v.upper + bound_tol)
      throw MilpError("variable '" + v.name + "' = " + fmt(x) + " outside [" + fmt(v.lower) + ", " + fmt(v.upper) +
                      "]");
    if (v.type == VarType::Binary && std::abs(x - std::round(x)) > integrality_tol)
      s.integrality_violations.push_back(static_cast<VarId>(i));
  }
  s.violation.resize(model.num_constraints(), 0.0);
  for (std::size_t r = 0; r < model.num_constraints(); ++r) {
    const auto& row = model.constraints()[r];
    double lhs = 0.0;
    for (const auto& [v, c] : row.terms) lhs += c * values[static_cast<std::size_t>(v)];
    double viol = 0.0;
    switch (row.sense) {
      case Sense::LessEqual: viol = std::max(0.0, lhs - row.rhs); break;
      case Sense::GreaterEqual: viol = std::max(0.0, row.rhs - lhs); break;
      case Sense::Equal: viol = std::abs(lhs - row.rhs); break;
    }
    s.violation[r] = viol;
    if (viol > s.max_violation) {
      s.max_violation = viol;
      s.worst_row = r;
    }
  }
  s.objective = model.objective_constant();
  for (const auto& [v, c] : model.objective()) s.objective += c * values[static_cast<std::size_t>(v)];
  return s;
}

SolvedModel apply_solution(const MilpModel& model, const std::unordered_map<std::string, double>& assignment,
                           double integrality_tol, double bound_tol) {
  std::vector<double> values(model.num_variables());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& name = model.variables()[i].name;
    auto it = assignment.find(name);
    if (it == assignment.end()) throw MilpError("assignment is missing variable '" + name + "'");
    values[i] = it->second;
  }
  return apply_solution(model, values, integrality_tol, bound_tol);
}

std::string format_assignment(const MilpModel& model, const std::vector<double>& values) {
  std::ostringstream os;
  for (std::size_t i = 0; i < model.num_variables(); ++i)
    os << model.variables()[i].name << ' ' << fmt(values.at(i)) << '\n';
  return os.str();
}

}  // namespace mgrestore
