#include "mgrestore/feeder_model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mgrestore {

using json = nlohmann::json;

namespace {

/// Reads fields from one JSON object and rejects any key that was never looked at.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw FeederError(path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw FeederError(path_of(key), "missing required field");
    return j_.at(key);
  }

  std::string path_of(const std::string& key) const { return path_ + "/" + key; }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw FeederError(path_of(key), "expected a number");
    return v.get<double>();
  }
  double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }
  /// JSON null maps to +infinity (no limit).
  double limit_or(const std::string& key, double fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (j_.at(key).is_null()) return kUnlimited;
    return number(key);
  }
  int integer_or(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw FeederError(path_of(key), "expected an integer");
    return v.get<int>();
  }
  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw FeederError(path_of(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string_or(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }
  bool boolean_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw FeederError(path_of(key), "expected true or false");
    return v.get<bool>();
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw FeederError(path_of(item.key()), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

bool valid_identifier(const std::string& id) {
  if (id.empty()) return false;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
              c == '.';
    if (!ok) return false;
  }
  return true;
}

std::string read_id(ObjectReader& r, const std::string& key) {
  std::string id = r.string(key);
  if (!valid_identifier(id))
    throw FeederError(r.path_of(key), "identifier '" + id + "' may only use letters, digits, '_' and '.'");
  return id;
}

PhaseSet read_phases(ObjectReader& r, const std::string& key) {
  std::string letters = r.string(key);
  auto set = PhaseSet::parse(letters);
  if (!set || set->empty()) throw FeederError(r.path_of(key), "expected a non-empty subset of \"abc\"");
  return *set;
}

PhaseValues read_phase_map(const json& j, const std::string& path) {
  if (!j.is_object()) throw FeederError(path, "expected an object keyed by phase letter");
  PhaseValues out{0.0, 0.0, 0.0};
  for (const auto& item : j.items()) {
    auto p = item.key().size() == 1 ? phase_from_letter(item.key()[0]) : std::nullopt;
    if (!p) throw FeederError(path + "/" + item.key(), "unknown phase");
    if (!item.value().is_number()) throw FeederError(path + "/" + item.key(), "expected a number");
    out[index_of(*p)] = item.value().get<double>();
  }
  return out;
}

json phase_map_json(const PhaseValues& v, PhaseSet phases) {
  json j = json::object();
  for (Phase p : phases.members()) j[std::string(1, phase_letter(p))] = v[index_of(p)];
  return j;
}

Matrix3c read_matrix(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  Matrix3c m = Matrix3c::Zero();
  auto fill = [&](const std::string& part, bool imag) {
    const json& rows = r.raw(part);
    std::string p = r.path_of(part);
    if (!rows.is_array() || rows.size() != 3) throw FeederError(p, "expected a 3x3 array");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!rows[i].is_array() || rows[i].size() != 3) throw FeederError(p, "expected a 3x3 array");
      for (std::size_t k = 0; k < 3; ++k) {
        if (!rows[i][k].is_number())
          throw FeederError(p + "/" + std::to_string(i) + "/" + std::to_string(k), "expected a number");
        double v = rows[i][k].get<double>();
        if (imag)
          m(i, k).imag(v);
        else
          m(i, k).real(v);
      }
    }
  };
  fill("re", false);
  fill("im", true);
  r.finish();
  return m;
}

json matrix_json(const Matrix3c& m) {
  json re = json::array(), im = json::array();
  for (int i = 0; i < 3; ++i) {
    json rr = json::array(), ii = json::array();
    for (int k = 0; k < 3; ++k) {
      rr.push_back(m(i, k).real());
      ii.push_back(m(i, k).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return json{{"re", re}, {"im", im}};
}

std::vector<PhaseValues> read_series(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw FeederError(path, "expected a non-empty array of phase maps");
  std::vector<PhaseValues> out;
  for (std::size_t t = 0; t < j.size(); ++t) out.push_back(read_phase_map(j[t], path + "/" + std::to_string(t)));
  return out;
}

json series_json(const std::vector<PhaseValues>& series, PhaseSet phases) {
  json j = json::array();
  for (const auto& v : series) j.push_back(phase_map_json(v, phases));
  return j;
}

Node parse_node(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  Node n;
  n.id = read_id(r, "id");
  n.phases = read_phases(r, "phases");
  n.base_kv = r.number("base_kv");
  r.finish();
  return n;
}

Branch parse_branch(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  Branch b;
  b.id = read_id(r, "id");
  b.from = read_id(r, "from");
  b.to = read_id(r, "to");
  b.phases = read_phases(r, "phases");
  b.switchable = r.boolean_or("switchable", false);
  b.damaged = r.boolean_or("damaged", false);
  b.impedance = read_matrix(r.raw("impedance_ohm"), r.path_of("impedance_ohm"));
  if (r.has("shunt_siemens")) b.shunt_admittance = read_matrix(r.raw("shunt_siemens"), r.path_of("shunt_siemens"));
  if (r.has("ampacity_a")) {
    const json& a = r.raw("ampacity_a");
    if (a.is_number()) {
      for (Phase p : b.phases.members()) b.ampacity[index_of(p)] = a.get<double>();
    } else {
      b.ampacity = read_phase_map(a, r.path_of("ampacity_a"));
    }
  }
  r.finish();
  return b;
}

Der parse_der(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  Der d;
  d.id = read_id(r, "id");
  d.node = read_id(r, "node");
  std::string kind = r.string("kind");
  auto k = der_kind_from_string(kind);
  if (!k) throw FeederError(r.path_of("kind"), "unknown DER kind '" + kind + "'");
  d.kind = *k;
  d.black_start = r.boolean_or("black_start", false);
  d.damaged = r.boolean_or("damaged", false);
  d.phases = read_phases(r, "phases");
  d.p_min = r.number("p_min_kw");
  d.p_max = r.number("p_max_kw");
  d.q_min = r.number("q_min_kvar");
  d.q_max = r.number("q_max_kvar");
  d.ramp_fraction = r.number_or("ramp_fraction", 1.0);
  d.base_mva_per_phase = r.number_or("base_mva_per_phase", 0.0);
  d.base_kv = r.number_or("base_kv", 0.0);
  d.coupling_inductor_pu = r.number_or("coupling_inductor_pu", 0.0);
  if (r.has("forecast")) {
    ObjectReader f(r.raw("forecast"), r.path_of("forecast"));
    d.forecast_p = read_series(f.raw("p_kw"), f.path_of("p_kw"));
    d.forecast_q = read_series(f.raw("q_kvar"), f.path_of("q_kvar"));
    f.finish();
  }
  r.finish();
  return d;
}

Load parse_load(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  Load l;
  l.id = read_id(r, "id");
  l.node = read_id(r, "node");
  l.phases = read_phases(r, "phases");
  l.p = read_phase_map(r.raw("p_kw"), r.path_of("p_kw"));
  l.q = read_phase_map(r.raw("q_kvar"), r.path_of("q_kvar"));
  if (r.has("zip")) {
    const json& z = r.raw("zip");
    if (!z.is_array() || z.size() != 3 || !z[0].is_number() || !z[1].is_number() || !z[2].is_number())
      throw FeederError(r.path_of("zip"), "expected [z, i, p] fractions");
    l.zip = {z[0].get<double>(), z[1].get<double>(), z[2].get<double>()};
  }
  l.switchable = r.boolean_or("switchable", true);
  l.controllable_dr = r.boolean_or("controllable_dr", false);
  l.damaged = r.boolean_or("damaged", false);
  l.dr_min_fraction = r.number_or("dr_min_fraction", 0.0);
  l.dr_max_fraction = r.number_or("dr_max_fraction", 1.0);
  if (r.has("profile")) {
    const json& p = r.raw("profile");
    if (!p.is_array() || p.empty()) throw FeederError(r.path_of("profile"), "expected a non-empty array");
    for (std::size_t t = 0; t < p.size(); ++t) {
      if (!p[t].is_number()) throw FeederError(r.path_of("profile") + "/" + std::to_string(t), "expected a number");
      l.profile.push_back(p[t].get<double>());
    }
  }
  r.finish();
  return l;
}

template <typename T, typename Fn>
std::vector<T> parse_array(ObjectReader& r, const std::string& key, Fn fn) {
  std::vector<T> out;
  if (!r.has(key)) return out;
  const json& arr = r.raw(key);
  if (!arr.is_array()) throw FeederError(r.path_of(key), "expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(fn(arr[i], r.path_of(key) + "/" + std::to_string(i)));
  return out;
}

void throw_first_issue(const ValidationReport& report) {
  if (report.ok()) return;
  const auto& first = report.issues.front();
  std::string msg = first.message + " [" + first.rule + "]";
  if (report.issues.size() > 1) msg += " (+" + std::to_string(report.issues.size() - 1) + " more)";
  throw FeederError(first.path, msg);
}

bool nonsingular_submatrix(const Matrix3c& m, PhaseSet phases) {
  auto members = phases.members();
  const auto n = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXcd sub(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) sub(i, k) = m(index_of(members[i]), index_of(members[k]));
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(sub);
  double scale = sub.cwiseAbs().maxCoeff();
  if (scale == 0.0) return false;
  lu.setThreshold(1e-12);
  return lu.isInvertible();
}

}  // namespace

std::string_view to_string(DerKind kind) {
  switch (kind) {
    case DerKind::Droop: return "droop";
    case DerKind::PqDispatchable: return "pq_dispatchable";
    case DerKind::PqNondispatchable: return "pq_nondispatchable";
  }
  return "droop";
}

std::optional<DerKind> der_kind_from_string(std::string_view s) {
  if (s == "droop") return DerKind::Droop;
  if (s == "pq_dispatchable") return DerKind::PqDispatchable;
  if (s == "pq_nondispatchable") return DerKind::PqNondispatchable;
  return std::nullopt;
}

PhaseValues Der::forecast_p_at(int step) const {
  if (forecast_p.empty()) return {0.0, 0.0, 0.0};
  std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::max(step, 1) - 1), forecast_p.size() - 1);
  return forecast_p[i];
}

PhaseValues Der::forecast_q_at(int step) const {
  if (forecast_q.empty()) return {0.0, 0.0, 0.0};
  std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::max(step, 1) - 1), forecast_q.size() - 1);
  return forecast_q[i];
}

double Load::multiplier_at(int step) const {
  if (profile.empty()) return 1.0;
  std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::max(step, 1) - 1), profile.size() - 1);
  return profile[i];
}

std::optional<std::size_t> FeederModel::find_node(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return i;
  return std::nullopt;
}

const Node& FeederModel::node(std::string_view id) const {
  auto i = find_node(id);
  if (!i) throw FeederError("", "unknown node '" + std::string(id) + "'");
  return nodes[*i];
}

std::unordered_map<std::string, std::size_t> FeederModel::node_lookup() const {
  std::unordered_map<std::string, std::size_t> out;
  out.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) out.emplace(nodes[i].id, i);
  return out;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& issue : issues) os << issue.path << ": " << issue.message << " [" << issue.rule << "]\n";
  return os.str();
}

FeederModel parse_feeder(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FeederError("", std::string("malformed document: ") + e.what());
  }
  ObjectReader r(doc, "");
  FeederModel m;
  m.name = r.string_or("name", "");
  m.notes = r.string_or("notes", "");
  m.base_frequency = r.number_or("base_frequency_hz", 60.0);
  m.step_interval = r.number_or("step_interval", 1.0);
  std::string units = r.string_or("units", "physical");
  if (units == "physical")
    m.units = Units::Physical;
  else if (units == "per_unit")
    m.units = Units::PerUnit;
  else
    throw FeederError("/units", "expected \"physical\" or \"per_unit\"");
  {
    ObjectReader b(r.raw("base"), "/base");
    m.base.mva_per_phase = b.number("mva_per_phase");
    m.base.kv_ln = b.number("kv_ln");
    b.finish();
  }
  m.nodes = parse_array<Node>(r, "nodes", parse_node);
  m.branches = parse_array<Branch>(r, "branches", parse_branch);
  m.ders = parse_array<Der>(r, "ders", parse_der);
  m.loads = parse_array<Load>(r, "loads", parse_load);
  r.finish();
  throw_first_issue(validate(m));
  return m;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FeederError(path, "cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

FeederModel load_feeder_file(const std::string& path) { return parse_feeder(read_text_file(path)); }

std::string serialize_feeder(const FeederModel& m) {
  json doc;
  doc["name"] = m.name;
  if (!m.notes.empty()) doc["notes"] = m.notes;
  doc["base_frequency_hz"] = m.base_frequency;
  doc["step_interval"] = m.step_interval;
  if (m.units == Units::PerUnit) doc["units"] = "per_unit";
  doc["base"] = {{"mva_per_phase", m.base.mva_per_phase}, {"kv_ln", m.base.kv_ln}};
  json nodes = json::array();
  for (const auto& n : m.nodes) nodes.push_back({{"id", n.id}, {"phases", n.phases.to_string()}, {"base_kv", n.base_kv}});
  doc["nodes"] = nodes;
  json branches = json::array();
  for (const auto& b : m.branches) {
    json j{{"id", b.id}, {"from", b.from}, {"to", b.to}, {"phases", b.phases.to_string()},
           {"switchable", b.switchable}, {"damaged", b.damaged}, {"impedance_ohm", matrix_json(b.impedance)}};
    if (!b.shunt_admittance.isZero(0.0)) j["shunt_siemens"] = matrix_json(b.shunt_admittance);
    j["ampacity_a"] = phase_map_json(b.ampacity, b.phases);
    branches.push_back(j);
  }
  doc["branches"] = branches;
  json ders = json::array();
  for (const auto& d : m.ders) {
    json j{{"id", d.id}, {"node", d.node}, {"kind", std::string(to_string(d.kind))},
           {"black_start", d.black_start}, {"damaged", d.damaged}, {"phases", d.phases.to_string()},
           {"p_min_kw", d.p_min}, {"p_max_kw", d.p_max}, {"q_min_kvar", d.q_min}, {"q_max_kvar", d.q_max},
           {"ramp_fraction", d.ramp_fraction}};
    if (d.base_mva_per_phase != 0.0) j["base_mva_per_phase"] = d.base_mva_per_phase;
    if (d.base_kv != 0.0) j["base_kv"] = d.base_kv;
    if (d.coupling_inductor_pu != 0.0) j["coupling_inductor_pu"] = d.coupling_inductor_pu;
    if (!d.forecast_p.empty() || !d.forecast_q.empty())
      j["forecast"] = {{"p_kw", series_json(d.forecast_p, d.phases)}, {"q_kvar", series_json(d.forecast_q, d.phases)}};
    ders.push_back(j);
  }
  doc["ders"] = ders;
  json loads = json::array();
  for (const auto& l : m.loads) {
    json j{{"id", l.id}, {"node", l.node}, {"phases", l.phases.to_string()},
           {"p_kw", phase_map_json(l.p, l.phases)}, {"q_kvar", phase_map_json(l.q, l.phases)},
           {"zip", json::array({l.zip.z, l.zip.i, l.zip.p})}, {"switchable", l.switchable},
           {"controllable_dr", l.controllable_dr}, {"damaged", l.damaged},
           {"dr_min_fraction", l.dr_min_fraction}, {"dr_max_fraction", l.dr_max_fraction}};
    if (!l.profile.empty()) j["profile"] = l.profile;
    loads.push_back(j);
  }
  doc["loads"] = loads;
  return doc.dump(1) + "\n";
}

ValidationReport validate(const FeederModel& m) {
  ValidationReport report;
  auto issue = [&](std::string path, std::string rule, std::string message) {
    report.issues.push_back({std::move(path), std::move(rule), std::move(message)});
  };

  if (!(m.base.mva_per_phase > 0.0) || !(m.base.kv_ln > 0.0))
    issue("/base", "positive-base", "per-unit bases must be positive");
  if (!(m.step_interval > 0.0)) issue("/step_interval", "positive-interval", "step interval must be positive");

  std::unordered_map<std::string, std::size_t> nodes;
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    const auto& n = m.nodes[i];
    std::string path = "/nodes/" + std::to_string(i);
    if (!nodes.emplace(n.id, i).second) issue(path + "/id", "unique-id", "duplicate node id '" + n.id + "'");
    if (n.phases.empty()) issue(path + "/phases", "node-phases", "node '" + n.id + "' has no phases");
    if (!(n.base_kv > 0.0)) issue(path + "/base_kv", "positive-base", "node '" + n.id + "' needs a positive base_kv");
  }

  auto attached = [&](const std::string& path, const std::string& owner, const std::string& node, PhaseSet phases) {
    auto it = nodes.find(node);
    if (it == nodes.end()) {
      issue(path + "/node", "dangling-reference", owner + " references unknown node '" + node + "'");
      return;
    }
    if (!phases.is_subset_of(m.nodes[it->second].phases))
      issue(path + "/phases", "phase-subset",
            owner + " phases '" + phases.to_string() + "' not present at node '" + node + "'");
  };

  std::set<std::string> branch_ids;
  for (std::size_t i = 0; i < m.branches.size(); ++i) {
    const auto& b = m.branches[i];
    std::string path = "/branches/" + std::to_string(i);
    if (!branch_ids.insert(b.id).second) issue(path + "/id", "unique-id", "duplicate branch id '" + b.id + "'");
    for (const auto* end : {&b.from, &b.to}) {
      auto it = nodes.find(*end);
      if (it == nodes.end()) {
        issue(path + (end == &b.from ? "/from" : "/to"), "dangling-reference",
              "branch '" + b.id + "' references unknown node '" + *end + "'");
      } else if (!b.phases.is_subset_of(m.nodes[it->second].phases)) {
        issue(path + "/phases", "phase-subset",
              "branch '" + b.id + "' phases '" + b.phases.to_string() + "' not present at node '" + *end + "'");
      }
    }
    if (b.from == b.to) issue(path, "distinct-endpoints", "branch '" + b.id + "' connects a node to itself");
    bool negative = false;
    for (Phase p : b.phases.members())
      if (b.impedance(index_of(p), index_of(p)).real() < 0.0) negative = true;
    if (negative)
      issue(path + "/impedance_ohm", "nonnegative-impedance", "branch '" + b.id + "' has negative self resistance");
    else if (!nonsingular_submatrix(b.impedance, b.phases))
      issue(path + "/impedance_ohm", "nonsingular-impedance", "branch '" + b.id + "' impedance is singular");
    for (Phase p : b.phases.members())
      if (b.ampacity[index_of(p)] < 0.0)
        issue(path + "/ampacity_a", "nonnegative-ampacity", "branch '" + b.id + "' has negative ampacity");
  }

  std::set<std::string> der_ids;
  for (std::size_t i = 0; i < m.ders.size(); ++i) {
    const auto& d = m.ders[i];
    std::string path = "/ders/" + std::to_string(i);
    if (!der_ids.insert(d.id).second) issue(path + "/id", "unique-id", "duplicate DER id '" + d.id + "'");
    attached(path, "DER '" + d.id + "'", d.node, d.phases);
    if (d.p_min > d.p_max) issue(path + "/p_min_kw", "ordered-limits", "DER '" + d.id + "' has p_min > p_max");
    if (d.q_min > d.q_max) issue(path + "/q_min_kvar", "ordered-limits", "DER '" + d.id + "' has q_min > q_max");
    if (!(d.ramp_fraction > 0.0))
      issue(path + "/ramp_fraction", "positive-ramp", "DER '" + d.id + "' needs a positive ramp fraction");
    if (d.black_start && d.kind != DerKind::Droop)
      issue(path + "/black_start", "black-start-droop",
            "DER '" + d.id + "' is black-start capable but not droop controlled; black-start units must be droop DGs");
    if (d.kind == DerKind::PqNondispatchable && (d.forecast_p.empty() || d.forecast_q.empty()))
      issue(path + "/forecast", "forecast-required", "non-dispatchable DER '" + d.id + "' needs a forecast");
  }

  std::set<std::string> load_ids;
  for (std::size_t i = 0; i < m.loads.size(); ++i) {
    const auto& l = m.loads[i];
    std::string path = "/loads/" + std::to_string(i);
    if (!load_ids.insert(l.id).second) issue(path + "/id", "unique-id", "duplicate load id '" + l.id + "'");
    attached(path, "load '" + l.id + "'", l.node, l.phases);
    const double fractions[3] = {l.zip.z, l.zip.i, l.zip.p};
    bool in_range = true;
    for (double f : fractions) in_range = in_range && f >= 0.0 && f <= 1.0;
    if (!in_range) issue(path + "/zip", "zip-range", "load '" + l.id + "' ZIP fractions must lie in [0, 1]");
    double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9)
      issue(path + "/zip", "zip-sum", "load '" + l.id + "' ZIP fractions sum to " + std::to_string(sum) + ", not 1");
    if (l.dr_min_fraction > l.dr_max_fraction)
      issue(path + "/dr_min_fraction", "ordered-limits", "load '" + l.id + "' has dr_min_fraction > dr_max_fraction");
    if (l.dr_min_fraction < 0.0)
      issue(path + "/dr_min_fraction", "nonnegative-dr", "load '" + l.id + "' has a negative DR fraction");
    for (double mult : l.profile)
      if (mult < 0.0) issue(path + "/profile", "nonnegative-profile", "load '" + l.id + "' has a negative multiplier");
  }
  return report;
}

namespace {

FeederModel rescale(const FeederModel& m, bool to_pu) {
  if (!(m.base.mva_per_phase > 0.0) || !(m.base.kv_ln > 0.0))
    throw FeederError("/base", "per-unit bases must be positive");
  FeederModel out = m;
  const double kva = m.base.kva_per_phase();
  const double power = to_pu ? 1.0 / kva : kva;
  auto lookup = m.node_lookup();
  auto node_kv = [&](const std::string& id) {
    auto it = lookup.find(id);
    double kv = it == lookup.end() ? m.base.kv_ln : m.nodes[it->second].base_kv;
    if (!(kv > 0.0)) throw FeederError("/nodes", "node '" + id + "' needs a positive base_kv");
    return kv;
  };
  for (auto& b : out.branches) {
    const double kv = node_kv(b.from);
    const double zb = m.base.z_ohm(kv);
    const double ib = m.base.i_amp(kv);
    if (to_pu) {
      b.impedance /= zb;
      b.shunt_admittance *= zb;
      for (double& a : b.ampacity) a /= ib;
    } else {
      b.impedance *= zb;
      b.shunt_admittance /= zb;
      for (double& a : b.ampacity) a *= ib;
    }
  }
  for (auto& d : out.ders) {
    d.p_min *= power;
    d.p_max *= power;
    d.q_min *= power;
    d.q_max *= power;
    for (auto& v : d.forecast_p)
      for (double& x : v) x *= power;
    for (auto& v : d.forecast_q)
      for (double& x : v) x *= power;
  }
  for (auto& l : out.loads) {
    for (double& x : l.p) x *= power;
    for (double& x : l.q) x *= power;
  }
  out.units = to_pu ? Units::PerUnit : Units::Physical;
  return out;
}

}  // namespace

FeederModel to_per_unit(const FeederModel& m) {
  if (m.units == Units::PerUnit) return m;
  return rescale(m, true);
}

FeederModel to_physical(const FeederModel& m) {
  if (m.units == Units::Physical) return m;
  return rescale(m, false);
}

ScenarioConfig parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FeederError("", std::string("malformed scenario: ") + e.what());
  }
  ObjectReader r(doc, "");
  ScenarioConfig c;
  r.string_or("name", "");
  r.string_or("notes", "");
  if (r.has("n_steps")) c.n_steps = r.integer_or("n_steps", 0);
  c.big_m_override = r.number_or("big_m", 0.0);
  c.polygon_sides = r.integer_or("polygon_sides", c.polygon_sides);
  c.v_min = r.number_or("v_min", c.v_min);
  c.v_max = r.number_or("v_max", c.v_max);
  c.angle_deviation_limit_deg = r.number_or("angle_deviation_limit_deg", c.angle_deviation_limit_deg);
  c.load_unbalance_limit = r.limit_or("load_unbalance_limit", c.load_unbalance_limit);
  c.dg_phase_unbalance_limit = r.limit_or("dg_phase_unbalance_limit", c.dg_phase_unbalance_limit);
  c.optimality_gap = r.number_or("optimality_gap", c.optimality_gap);
  c.solver_time_limit = r.number_or("solver_time_limit_s", c.solver_time_limit);
  c.enforce_ampacity = r.boolean_or("enforce_ampacity", c.enforce_ampacity);
  c.include_shunts = r.boolean_or("include_shunts", c.include_shunts);
  c.integrality_tolerance = r.number_or("integrality_tolerance", c.integrality_tolerance);
  c.residual_tolerance = r.number_or("residual_tolerance", c.residual_tolerance);
  r.finish();
  auto problems = check_scenario(c);
  if (!problems.empty()) throw FeederError("", problems.front());
  return c;
}

ScenarioConfig load_scenario_file(const std::string& path) { return parse_scenario(read_text_file(path)); }

std::string serialize_scenario(const ScenarioConfig& c) {
  auto limit = [](double v) { return std::isinf(v) ? json(nullptr) : json(v); };
  json doc{{"polygon_sides", c.polygon_sides},
           {"v_min", c.v_min},
           {"v_max", c.v_max},
           {"angle_deviation_limit_deg", c.angle_deviation_limit_deg},
           {"load_unbalance_limit", limit(c.load_unbalance_limit)},
           {"dg_phase_unbalance_limit", limit(c.dg_phase_unbalance_limit)},
           {"optimality_gap", c.optimality_gap},
           {"solver_time_limit_s", c.solver_time_limit},
           {"enforce_ampacity", c.enforce_ampacity},
           {"include_shunts", c.include_shunts},
           {"integrality_tolerance", c.integrality_tolerance},
           {"residual_tolerance", c.residual_tolerance}};
  if (c.n_steps) doc["n_steps"] = *c.n_steps;
  if (c.big_m_override > 0.0) doc["big_m"] = c.big_m_override;
  return doc.dump(1) + "\n";
}

std::vector<std::string> check_scenario(const ScenarioConfig& c) {
  std::vector<std::string> out;
  if (c.n_steps && *c.n_steps < 1) out.push_back("n_steps must be at least 1");
  if (c.polygon_sides < 6) out.push_back("polygon_sides must be at least 6");
  if (!(c.v_min > 0.0) || !(c.v_min < c.v_max)) out.push_back("voltage limits need 0 < v_min < v_max");
  if (!(c.angle_deviation_limit_deg >= 0.0) || !(c.angle_deviation_limit_deg < 90.0))
    out.push_back("angle_deviation_limit_deg must lie in [0, 90)");
  if (!(c.load_unbalance_limit >= 0.0)) out.push_back("load_unbalance_limit must be non-negative");
  if (!(c.dg_phase_unbalance_limit >= 0.0)) out.push_back("dg_phase_unbalance_limit must be non-negative");
  if (!(c.optimality_gap >= 0.0)) out.push_back("optimality_gap must be non-negative");
  if (!(c.solver_time_limit > 0.0)) out.push_back("solver_time_limit_s must be positive");
  if (c.big_m_override < 0.0) out.push_back("big_m must be positive when given");
  return out;
}

}  // namespace mgrestore
