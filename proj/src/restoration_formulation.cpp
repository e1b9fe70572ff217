#include "mgrestore/restoration_formulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace mgrestore {

namespace {

using E = LinExpr;

std::string row_name(const std::string& family, std::initializer_list<std::string> parts, int t) {
  std::string s = family;
  for (const auto& p : parts) {
    s += '.';
    s += p;
  }
  if (t > 0) s += ".t" + std::to_string(t);
  return s;
}

std::string ph(Phase p) { return std::string(1, phase_letter(p)); }

bool black_start_unit(const Der& d) { return d.black_start && !d.damaged && d.kind == DerKind::Droop; }

/// Per-phase box of a DG's active or reactive output when on.
std::pair<double, double> dg_phase_box(const Der& d, bool reactive, int step) {
  const double lo = reactive ? d.q_min : d.p_min;
  const double hi = reactive ? d.q_max : d.p_max;
  const double n = static_cast<double>(d.phases.size());
  switch (d.kind) {
    case DerKind::Droop: return {std::min(lo, 0.0), std::max(hi, 0.0)};
    case DerKind::PqDispatchable: return {lo / n, hi / n};
    case DerKind::PqNondispatchable: {
      double f_lo = 0.0, f_hi = 0.0;
      for (Phase p : d.phases.members()) {
        const double f = reactive ? d.forecast_q_at(step)[index_of(p)] : d.forecast_p_at(step)[index_of(p)];
        f_lo = std::min(f_lo, f);
        f_hi = std::max(f_hi, f);
      }
      return {f_lo, f_hi};
    }
  }
  return {0.0, 0.0};
}

const char* p_symbol(const Der& d) { return d.kind == DerKind::Droop ? sym::kPref : sym::kPdg; }
const char* q_symbol(const Der& d) { return d.kind == DerKind::Droop ? sym::kQref : sym::kQdg; }

}  // namespace

std::string block_name(int block) { return "K" + std::to_string(block); }

std::string VarKey::to_string() const {
  std::string s = symbol + "_" + element;
  if (phase != '-') s += std::string("_") + phase;
  if (step > 0) s += "_" + std::to_string(step);
  return s;
}

void VariableIndex::insert(const VarKey& key, VarId id) {
  if (!by_key_.emplace(key, id).second) throw FormulationError("duplicate variable key " + key.to_string());
  if (static_cast<std::size_t>(id) != keys_.size())
    throw FormulationError("variable ids must be registered in creation order");
  keys_.push_back(key);
}

std::optional<VarId> VariableIndex::find(const VarKey& key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

VarId VariableIndex::at(const VarKey& key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end()) throw FormulationError("no variable " + key.to_string());
  return it->second;
}

std::map<std::string, std::size_t> RestorationProblem::family_counts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& r : model.constraints()) ++out[r.tag];
  return out;
}

std::string RestorationProblem::provenance_report() const {
  std::ostringstream os;
  os << "constraint\tfamily\n";
  for (const auto& r : model.constraints()) os << r.name << '\t' << r.tag << '\n';
  return os.str();
}

RestorationBuilder::RestorationBuilder(const FeederModel& feeder, const ScenarioConfig& config, int n_steps) {
  if (n_steps < 1) throw FormulationError("n_steps must be at least 1");
  auto problems = check_scenario(config);
  if (!problems.empty()) throw FormulationError(problems.front());
  auto report = validate(feeder);
  if (!report.ok()) throw FormulationError("invalid feeder: " + report.issues.front().message);
  p_.feeder = to_per_unit(feeder);
  p_.config = config;
  p_.n_steps = n_steps;
  p_.objective_scale_kw = p_.feeder.base.kva_per_phase();
  if (connected_subgraphs(p_.feeder).size() != 1)
    throw FormulationError("feeder is not connected; split it into subgraphs first");
  p_.blocks = reduce_to_bus_blocks(p_.feeder);
  std::set<std::pair<int, int>> links;
  for (const auto& e : p_.blocks.edges) links.emplace(std::min(e.a, e.b), std::max(e.a, e.b));
  p_.block_links.assign(links.begin(), links.end());
  for (const auto& d : p_.feeder.ders) intact_dg_.push_back(!d.damaged);
  for (const auto& l : p_.feeder.loads) intact_load_.push_back(!l.damaged);
  declare_variables();
}

VarId RestorationBuilder::add(const char* symbol, const std::string& element, char phase, int step, double lo,
                              double hi, VarType type) {
  VarKey key{symbol, element, phase, step};
  VarId id = p_.model.add_variable(key.to_string(), lo, hi, type);
  p_.index.insert(key, id);
  return id;
}

void RestorationBuilder::declare_variables() {
  const auto& f = p_.feeder;
  const auto& c = p_.config;
  for (int t = 1; t <= p_.n_steps; ++t) {
    for (const auto& n : f.nodes) add(sym::kNode, n.id, '-', t, 0, 1, VarType::Binary);
    for (const auto& b : p_.blocks.blocks) add(sym::kBlock, block_name(b.id), '-', t, 0, 1, VarType::Binary);
    for (const auto& [a, b] : p_.block_links)
      add(sym::kBlockLink, block_name(a) + "_" + block_name(b), '-', t, 0, 1, VarType::Binary);
    for (const auto& d : f.ders) add(sym::kDg, d.id, '-', t, 0, 1, VarType::Binary);
    for (const auto& b : f.branches) add(sym::kBranch, b.id, '-', t, 0, 1, VarType::Binary);
    for (const auto& l : f.loads) add(sym::kLoad, l.id, '-', t, 0, 1, VarType::Binary);
    for (const auto& n : f.nodes) {
      for (Phase p : n.phases.members()) {
        auto box = sector_box(p, c.v_min, c.v_max, c.angle_deviation_limit_deg);
        add(sym::kVre, n.id, phase_letter(p), t, box.re_lo, box.re_hi, VarType::Continuous);
        add(sym::kVim, n.id, phase_letter(p), t, box.im_lo, box.im_hi, VarType::Continuous);
      }
    }
    for (const auto& d : f.ders) {
      auto pb = dg_phase_box(d, false, t), qb = dg_phase_box(d, true, t);
      for (Phase p : d.phases.members()) {
        add(p_symbol(d), d.id, phase_letter(p), t, std::min(pb.first, 0.0), std::max(pb.second, 0.0),
            VarType::Continuous);
        add(q_symbol(d), d.id, phase_letter(p), t, std::min(qb.first, 0.0), std::max(qb.second, 0.0),
            VarType::Continuous);
      }
    }
    for (const auto& l : f.loads) {
      if (!l.controllable_dr) continue;
      for (Phase p : l.phases.members()) {
        const double pm = l.dr_max_fraction * l.p[index_of(p)] * l.multiplier_at(t);
        const double qm = l.dr_max_fraction * l.q[index_of(p)] * l.multiplier_at(t);
        add(sym::kPload, l.id, phase_letter(p), t, std::min(pm, 0.0), std::max(pm, 0.0), VarType::Continuous);
        add(sym::kQload, l.id, phase_letter(p), t, std::min(qm, 0.0), std::max(qm, 0.0), VarType::Continuous);
      }
    }
  }
}

LinExpr RestorationBuilder::dg_total(std::size_t g, bool reactive, int t) const {
  const Der& d = p_.feeder.ders[g];
  E e;
  for (Phase p : d.phases.members()) e.add(var(reactive ? q_symbol(d) : p_symbol(d), d.id, phase_letter(p), t), 1.0);
  return e;
}

LinExpr RestorationBuilder::load_phase_power(std::size_t l, Phase p, int t) const {
  const Load& ld = p_.feeder.loads[l];
  if (ld.controllable_dr) return E::var(var(sym::kPload, ld.id, phase_letter(p), t));
  return E::var(var(sym::kLoad, ld.id, '-', t), ld.p[index_of(p)] * ld.multiplier_at(t));
}

void RestorationBuilder::build_objective() {
  E obj;
  const double scale = p_.objective_scale_kw * p_.feeder.step_interval;
  for (int t = 1; t <= p_.n_steps; ++t)
    for (std::size_t l = 0; l < p_.feeder.loads.size(); ++l)
      for (Phase p : p_.feeder.loads[l].phases.members()) obj += (-scale) * load_phase_power(l, p, t);
  p_.model.set_objective(obj);
}

void RestorationBuilder::build_initial_sequencing() {
  auto& m = p_.model;
  const auto& f = p_.feeder;
  E starters;
  for (const auto& d : f.ders)
    if (black_start_unit(d)) starters.add(var(sym::kDg, d.id, '-', 1), 1.0);
  if (starters.terms.empty()) throw FormulationError("no black-start droop DG: at least one is needed to start");
  m.add_constraint("startup_single_droop.t1", starters, Sense::Equal, 1.0, "startup_single_droop");
  for (const auto& d : f.ders)
    if (!black_start_unit(d))
      m.add_constraint(row_name("startup_others_off", {d.id}, 1), E::var(var(sym::kDg, d.id, '-', 1)), Sense::Equal,
                       0.0, "startup_others_off");
  for (const auto& b : f.branches)
    if (b.switchable && !b.damaged)
      m.add_constraint(row_name("startup_switches_open", {b.id}, 1), E::var(var(sym::kBranch, b.id, '-', 1)),
                       Sense::Equal, 0.0, "startup_switches_open");
  for (int t = 1; t <= p_.n_steps; ++t) {
    for (const auto& b : f.branches)
      if (b.damaged)
        m.add_constraint(row_name("damaged_off", {b.id}, t), E::var(var(sym::kBranch, b.id, '-', t)), Sense::Equal,
                         0.0, "damaged_off");
    for (const auto& d : f.ders)
      if (d.damaged)
        m.add_constraint(row_name("damaged_off", {d.id}, t), E::var(var(sym::kDg, d.id, '-', t)), Sense::Equal, 0.0,
                         "damaged_off");
    for (const auto& l : f.loads)
      if (l.damaged)
        m.add_constraint(row_name("damaged_off", {l.id}, t), E::var(var(sym::kLoad, l.id, '-', t)), Sense::Equal,
                         0.0, "damaged_off");
  }
}

void RestorationBuilder::build_connectivity() {
  auto& m = p_.model;
  const auto& f = p_.feeder;
  const auto& g = p_.blocks;
  auto monotone = [&](const char* symbol, const std::string& el, const std::string& family, int t) {
    m.add_constraint(row_name(family, {el}, t),
                     E::var(var(symbol, el, '-', t)) - E::var(var(symbol, el, '-', t - 1)), Sense::GreaterEqual, 0.0,
                     family);
  };
  for (int t = 1; t <= p_.n_steps; ++t) {
    for (const auto& d : f.ders) {
      m.add_constraint(row_name("dg_host", {d.id}, t),
                       E::var(var(sym::kDg, d.id, '-', t)) - E::var(var(sym::kNode, d.node, '-', t)),
                       Sense::LessEqual, 0.0, "dg_host");
      if (t > 1) monotone(sym::kDg, d.id, "dg_monotone", t);
    }
    for (const auto& b : f.branches) {
      if (b.damaged) continue;
      const VarId x = var(sym::kBranch, b.id, '-', t);
      for (const auto* end : {&b.from, &b.to}) {
        const VarId xn = var(sym::kNode, *end, '-', t);
        const std::string side = end == &b.from ? "from" : "to";
        if (b.switchable)
          m.add_constraint(row_name("switch_ends", {b.id, side}, t), E::var(x) - E::var(xn), Sense::LessEqual, 0.0,
                           "switch_ends");
        else
          m.add_constraint(row_name("fixed_branch_ends", {b.id, side}, t), E::var(x) - E::var(xn), Sense::Equal, 0.0,
                           "fixed_branch_ends");
      }
      if (t > 1) monotone(sym::kBranch, b.id, "branch_monotone", t);
    }
    for (const auto& l : f.loads) {
      if (l.damaged) continue;
      const E diff = E::var(var(sym::kLoad, l.id, '-', t)) - E::var(var(sym::kNode, l.node, '-', t));
      if (l.is_switchable())
        m.add_constraint(row_name("load_host", {l.id}, t), diff, Sense::LessEqual, 0.0, "load_host");
      else
        m.add_constraint(row_name("load_fixed", {l.id}, t), diff, Sense::Equal, 0.0, "load_fixed");
      if (t > 1) monotone(sym::kLoad, l.id, "load_monotone", t);
    }
    for (const auto& n : f.nodes) {
      const int b = g.block_of.at(n.id);
      m.add_constraint(row_name("block_membership", {n.id}, t),
                       E::var(var(sym::kNode, n.id, '-', t)) - E::var(var(sym::kBlock, block_name(b), '-', t)),
                       Sense::Equal, 0.0, "block_membership");
    }
    for (const auto& b : g.blocks)
      if (t > 1) monotone(sym::kBlock, block_name(b.id), "block_monotone", t);

    // a block pair is linked when any switch between them is closed
    for (const auto& [a, b] : p_.block_links) {
      const std::string el = block_name(a) + "_" + block_name(b);
      const VarId link = var(sym::kBlockLink, el, '-', t);
      E any = E::var(link);
      for (const auto& e : g.edges) {
        if (std::min(e.a, e.b) != a || std::max(e.a, e.b) != b) continue;
        const VarId sw = var(sym::kBranch, e.branch, '-', t);
        m.add_constraint(row_name("block_link", {el, e.branch}, t), E::var(link) - E::var(sw), Sense::GreaterEqual,
                         0.0, "block_link");
        any.add(sw, -1.0);
      }
      m.add_constraint(row_name("block_link", {el, "any"}, t), any, Sense::LessEqual, 0.0, "block_link");
    }

    // a block energizes through the startup unit at t = 1, later only from a block live at t - 1
    for (const auto& blk : g.blocks) {
      const std::string bn = block_name(blk.id);
      E rhs;
      if (t == 1) {
        for (const auto& d : f.ders)
          if (black_start_unit(d) && g.block_of.at(d.node) == blk.id) rhs.add(var(sym::kDg, d.id, '-', 1), 1.0);
        m.add_constraint(row_name("block_start", {bn}, t), E::var(var(sym::kBlock, bn, '-', 1)) - rhs,
                         Sense::LessEqual, 0.0, "block_start");
        continue;
      }
      E lhs = E::var(var(sym::kBlock, bn, '-', t)) - E::var(var(sym::kBlock, bn, '-', t - 1));
      for (const auto& [a, b] : p_.block_links) {
        if (a != blk.id && b != blk.id) continue;
        const int other = a == blk.id ? b : a;
        const std::string link = block_name(a) + "_" + block_name(b);
        const std::string el = bn + "_" + block_name(other);
        const VarId z = add(sym::kReach, el, '-', t, 0.0, 1.0, VarType::Continuous);
        m.add_constraint(row_name("reach_support", {el, "link"}, t),
                         E::var(z) - E::var(var(sym::kBlockLink, link, '-', t)), Sense::LessEqual, 0.0,
                         "reach_support");
        m.add_constraint(row_name("reach_support", {el, "prev"}, t),
                         E::var(z) - E::var(var(sym::kBlock, block_name(other), '-', t - 1)), Sense::LessEqual, 0.0,
                         "reach_support");
        lhs.add(z, -1.0);
      }
      m.add_constraint(row_name("block_reach", {bn}, t), lhs, Sense::LessEqual, 0.0, "block_reach");
    }
  }
}

void RestorationBuilder::build_power_flow() {
  auto& m = p_.model;
  const auto& f = p_.feeder;
  const auto& c = p_.config;
  std::vector<bool> status;
  for (const auto& b : f.branches) status.push_back(!b.damaged);
  const AdmittanceMatrix adm = assemble_bus_admittance(f, status, c.include_shunts);
  const auto terms = current_balance_terms(f, adm);
  const auto lookup = f.node_lookup();
  std::vector<LinearInjection> inj;
  for (const auto& l : f.loads) inj.push_back(linearize_zip_injection(l));
  const NominalVoltageProfile nominal;
  // half of each fixed branch's shunt admittance at either end; switched branches carry none
  struct ShuntTerm {
    std::string node;
    Phase v_phase;
    cplx y;
  };
  std::vector<std::vector<ShuntTerm>> shunts(adm.index.size());
  if (c.include_shunts) {
    for (const auto& b : f.branches) {
      if (b.damaged || b.switchable) continue;
      for (const auto* end : {&b.from, &b.to})
        for (Phase p : b.phases.members())
          for (Phase q : b.phases.members()) {
            const cplx y = 0.5 * b.shunt_admittance(index_of(p), index_of(q));
            if (y != cplx(0.0, 0.0)) shunts[adm.index.find(lookup.at(*end), p)].push_back({*end, q, y});
          }
    }
  }
  const double tan_dev = std::tan(c.angle_deviation_limit_deg * std::numbers::pi / 180.0);

  for (int t = 1; t <= p_.n_steps; ++t) {
    // voltage sector; collapses to the origin when the node is off
    for (const auto& n : f.nodes) {
      const VarId xn = var(sym::kNode, n.id, '-', t);
      for (Phase p : n.phases.members()) {
        const double th = nominal_angle(p), cs = std::cos(th), sn = std::sin(th);
        const VarId vr = var(sym::kVre, n.id, phase_letter(p), t), vi = var(sym::kVim, n.id, phase_letter(p), t);
        E proj = E::var(vr, cs) + E::var(vi, sn);
        E perp = E::var(vr, -sn) + E::var(vi, cs);
        m.add_constraint(row_name("voltage_sector", {n.id, ph(p), "min"}, t), proj - E::var(xn, c.v_min),
                         Sense::GreaterEqual, 0.0, "voltage_sector");
        m.add_constraint(row_name("voltage_sector", {n.id, ph(p), "max"}, t), proj - E::var(xn, c.v_max),
                         Sense::LessEqual, 0.0, "voltage_sector");
        m.add_constraint(row_name("voltage_sector", {n.id, ph(p), "ccw"}, t), perp - tan_dev * proj, Sense::LessEqual,
                         0.0, "voltage_sector");
        m.add_constraint(row_name("voltage_sector", {n.id, ph(p), "cw"}, t), (-1.0) * perp - tan_dev * proj,
                         Sense::LessEqual, 0.0, "voltage_sector");
      }
    }

    // switched branches carry x * dV as product variables
    for (const auto& b : f.branches) {
      if (b.damaged || !b.switchable) continue;
      const VarId x = var(sym::kBranch, b.id, '-', t);
      for (Phase q : b.phases.members()) {
        const char pl = phase_letter(q);
        auto bf = sector_box(q, c.v_min, c.v_max, c.angle_deviation_limit_deg);
        const double re_lo = bf.re_lo - bf.re_hi, re_hi = bf.re_hi - bf.re_lo;
        const double im_lo = bf.im_lo - bf.im_hi, im_hi = bf.im_hi - bf.im_lo;
        const VarId dr = add(sym::kDVre, b.id, pl, t, re_lo, re_hi, VarType::Continuous);
        const VarId di = add(sym::kDVim, b.id, pl, t, im_lo, im_hi, VarType::Continuous);
        m.add_constraint(row_name("switch_voltage_drop", {b.id, ph(q), "re"}, t),
                         E::var(dr) - E::var(var(sym::kVre, b.from, pl, t)) + E::var(var(sym::kVre, b.to, pl, t)),
                         Sense::Equal, 0.0, "switch_voltage_drop");
        m.add_constraint(row_name("switch_voltage_drop", {b.id, ph(q), "im"}, t),
                         E::var(di) - E::var(var(sym::kVim, b.from, pl, t)) + E::var(var(sym::kVim, b.to, pl, t)),
                         Sense::Equal, 0.0, "switch_voltage_drop");
        const VarId wr = link_binary_product(m, x, dr, VarKey{sym::kWBre, b.id, pl, t}.to_string(), "switch_flow_product");
        p_.index.insert({sym::kWBre, b.id, pl, t}, wr);
        const VarId wi = link_binary_product(m, x, di, VarKey{sym::kWBim, b.id, pl, t}.to_string(), "switch_flow_product");
        p_.index.insert({sym::kWBim, b.id, pl, t}, wi);
      }
    }

    // switchable non-DR loads see x * V
    for (const auto& l : f.loads) {
      if (l.damaged || l.controllable_dr || !l.is_switchable()) continue;
      const VarId x = var(sym::kLoad, l.id, '-', t);
      for (Phase p : l.phases.members()) {
        const char pl = phase_letter(p);
        const VarId wr = link_binary_product(m, x, var(sym::kVre, l.node, pl, t),
                                             VarKey{sym::kWLre, l.id, pl, t}.to_string(), "load_voltage_product");
        p_.index.insert({sym::kWLre, l.id, pl, t}, wr);
        const VarId wi = link_binary_product(m, x, var(sym::kVim, l.node, pl, t),
                                             VarKey{sym::kWLim, l.id, pl, t}.to_string(), "load_voltage_product");
        p_.index.insert({sym::kWLim, l.id, pl, t}, wi);
      }
    }

    // rectangular drop per phase, as product variables for switched branches
    auto drop = [&](const Branch& b, Phase q) -> std::pair<E, E> {
      const char pl = phase_letter(q);
      if (b.switchable) return {E::var(var(sym::kWBre, b.id, pl, t)), E::var(var(sym::kWBim, b.id, pl, t))};
      return {E::var(var(sym::kVre, b.from, pl, t)) - E::var(var(sym::kVre, b.to, pl, t)),
              E::var(var(sym::kVim, b.from, pl, t)) - E::var(var(sym::kVim, b.to, pl, t))};
    };

    for (std::size_t slot = 0; slot < adm.index.size(); ++slot) {
      const auto& [ni, p] = adm.index.at(slot);
      const Node& n = f.nodes[ni];
      const char pl = phase_letter(p);
      E re, im;
      for (const auto& term : terms[slot]) {
        auto [dr, di] = drop(f.branches[term.branch], term.v_phase);
        const double s = term.sign;
        re += (s * term.g) * dr;
        re += (-s * term.b) * di;
        im += (s * term.b) * dr;
        im += (s * term.g) * di;
      }
      for (const auto& sh : shunts[slot]) {
        const char q = phase_letter(sh.v_phase);
        const VarId vr = var(sym::kVre, sh.node, q, t), vi = var(sym::kVim, sh.node, q, t);
        re += E::var(vr, sh.y.real()) + E::var(vi, -sh.y.imag());
        im += E::var(vr, sh.y.imag()) + E::var(vi, sh.y.real());
      }
      for (std::size_t li = 0; li < f.loads.size(); ++li) {
        const Load& l = f.loads[li];
        if (l.damaged || l.node != n.id || !l.phases.contains(p)) continue;
        const PhaseInjection& pi = inj[li].phase[index_of(p)];
        if (l.controllable_dr) {
          const VarId pv = var(sym::kPload, l.id, pl, t), qv = var(sym::kQload, l.id, pl, t);
          re += E::var(pv, pi.per_p.real()) + E::var(qv, pi.per_q.real());
          im += E::var(pv, pi.per_p.imag()) + E::var(qv, pi.per_q.imag());
          continue;
        }
        const double mult = l.multiplier_at(t);
        const VarId x = var(sym::kLoad, l.id, '-', t);
        VarId vr, vi;
        if (l.is_switchable()) {
          vr = var(sym::kWLre, l.id, pl, t);
          vi = var(sym::kWLim, l.id, pl, t);
        } else {
          vr = var(sym::kVre, n.id, pl, t);
          vi = var(sym::kVim, n.id, pl, t);
        }
        re += E::var(x, mult * pi.c0.real()) + E::var(vr, mult * pi.jacobian(0, 0)) + E::var(vi, mult * pi.jacobian(0, 1));
        im += E::var(x, mult * pi.c0.imag()) + E::var(vr, mult * pi.jacobian(1, 0)) + E::var(vi, mult * pi.jacobian(1, 1));
      }
      for (const auto& d : f.ders) {
        if (d.damaged || d.node != n.id || !d.phases.contains(p)) continue;
        const cplx per_p = setpoint_current({1.0, 0.0}, nominal.v[index_of(p)]);
        const cplx per_q = setpoint_current({0.0, 1.0}, nominal.v[index_of(p)]);
        const VarId pv = var(p_symbol(d), d.id, pl, t), qv = var(q_symbol(d), d.id, pl, t);
        re -= E::var(pv, per_p.real()) + E::var(qv, per_q.real());
        im -= E::var(pv, per_p.imag()) + E::var(qv, per_q.imag());
      }
      m.add_constraint(row_name("current_balance", {n.id, ph(p), "re"}, t), re, Sense::Equal, 0.0, "current_balance");
      m.add_constraint(row_name("current_balance", {n.id, ph(p), "im"}, t), im, Sense::Equal, 0.0, "current_balance");
    }

    if (!c.enforce_ampacity) continue;
    const auto halfplanes_for = [&](double imax) { return polygon_halfplanes(imax, c.polygon_sides); };
    for (std::size_t bi = 0; bi < f.branches.size(); ++bi) {
      const Branch& b = f.branches[bi];
      if (b.damaged) continue;
      const auto block = ohm_line_current(adm.series[bi]);
      for (Phase p : b.phases.members()) {
        const double imax = b.ampacity[index_of(p)];
        if (!(imax > 0.0)) continue;
        const char pl = phase_letter(p);
        E ire, iim;
        for (Phase q : b.phases.members()) {
          auto [dr, di] = drop(b, q);
          const auto r = static_cast<int>(index_of(p)), k = static_cast<int>(index_of(q));
          ire += block(r, k) * dr;
          ire += block(r, k + 3) * di;
          iim += block(r + 3, k) * dr;
          iim += block(r + 3, k + 3) * di;
        }
        const VarId vr = add(sym::kIre, b.id, pl, t, -kUnlimited, kUnlimited, VarType::Continuous);
        const VarId vi = add(sym::kIim, b.id, pl, t, -kUnlimited, kUnlimited, VarType::Continuous);
        m.add_constraint(row_name("line_current", {b.id, ph(p), "re"}, t), E::var(vr) - ire, Sense::Equal, 0.0,
                         "line_current");
        m.add_constraint(row_name("line_current", {b.id, ph(p), "im"}, t), E::var(vi) - iim, Sense::Equal, 0.0,
                         "line_current");
        const auto planes = halfplanes_for(imax);
        for (std::size_t j = 0; j < planes.size(); ++j)
          m.add_constraint(row_name("ampacity_polygon", {b.id, ph(p), std::to_string(j)}, t),
                           E::var(vr, planes[j].alpha) + E::var(vi, planes[j].beta), Sense::LessEqual,
                           planes[j].gamma, "ampacity_polygon");
      }
    }
  }
}

void RestorationBuilder::build_der_constraints() {
  auto& m = p_.model;
  const auto& f = p_.feeder;
  for (int t = 1; t <= p_.n_steps; ++t) {
    for (std::size_t gi = 0; gi < f.ders.size(); ++gi) {
      const Der& d = f.ders[gi];
      const VarId x = var(sym::kDg, d.id, '-', t);
      for (bool reactive : {false, true}) {
        const char* s = reactive ? q_symbol(d) : p_symbol(d);
        const char* pq = reactive ? "q" : "p";
        const auto box = dg_phase_box(d, reactive, t);
        for (Phase p : d.phases.members()) {
          const VarId v = var(s, d.id, phase_letter(p), t);
          if (d.kind == DerKind::PqNondispatchable) {
            const double fc = reactive ? d.forecast_q_at(t)[index_of(p)] : d.forecast_p_at(t)[index_of(p)];
            m.add_constraint(row_name("forecast_output", {d.id, pq, ph(p)}, t), E::var(v) - E::var(x, fc), Sense::Equal,
                             0.0, "forecast_output");
            continue;
          }
          m.add_constraint(row_name("dg_phase_box", {d.id, pq, ph(p), "lo"}, t), E::var(v) - E::var(x, box.first),
                           Sense::GreaterEqual, 0.0, "dg_phase_box");
          m.add_constraint(row_name("dg_phase_box", {d.id, pq, ph(p), "hi"}, t), E::var(v) - E::var(x, box.second),
                           Sense::LessEqual, 0.0, "dg_phase_box");
        }
        if (d.kind == DerKind::Droop) {
          const double lo = reactive ? d.q_min : d.p_min, hi = reactive ? d.q_max : d.p_max;
          const E total = dg_total(gi, reactive, t);
          m.add_constraint(row_name("droop_limits", {d.id, pq, "lo"}, t), total - E::var(x, lo), Sense::GreaterEqual,
                           0.0, "droop_limits");
          m.add_constraint(row_name("droop_limits", {d.id, pq, "hi"}, t), total - E::var(x, hi), Sense::LessEqual, 0.0,
                           "droop_limits");
        }
        // ramp, measured from zero output before the first step
        const double cap = reactive ? std::max(std::abs(d.q_min), std::abs(d.q_max)) : std::max(std::abs(d.p_min), std::abs(d.p_max));
        const double limit = d.ramp_fraction * cap;
        E delta = dg_total(gi, reactive, t);
        if (t > 1) delta -= dg_total(gi, reactive, t - 1);
        m.add_constraint(row_name("ramp", {d.id, pq, "up"}, t), delta, Sense::LessEqual, limit, "ramp");
        m.add_constraint(row_name("ramp", {d.id, pq, "down"}, t), delta, Sense::GreaterEqual, -limit, "ramp");
      }
    }
  }

  // synchronization of a droop unit pauses everything else for one step
  for (int t = 2; t <= p_.n_steps; ++t) {
    E sigma;
    for (const auto& d : f.ders) {
      if (d.kind != DerKind::Droop || d.damaged) continue;
      sigma += E::var(var(sym::kDg, d.id, '-', t)) - E::var(var(sym::kDg, d.id, '-', t - 1));
    }
    if (sigma.terms.empty()) continue;
    m.add_constraint(row_name("sync_single", {}, t), sigma, Sense::LessEqual, 1.0, "sync_single");
    auto freeze_var = [&](const char* symbol, const std::string& el, char phase, const std::string& what) {
      const VarId a = var(symbol, el, phase, t), b = var(symbol, el, phase, t - 1);
      const auto& va = m.variable(a);
      const auto& vb = m.variable(b);
      const double big_m = std::max(va.upper, vb.upper) - std::min(va.lower, vb.lower);
      if (big_m <= 0.0) return;
      const std::string name = phase == '-' ? row_name("sync_freeze", {what, el}, t)
                                            : row_name("sync_freeze", {what, el, std::string(1, phase)}, t);
      freeze_if(m, sigma, E::var(a), E::var(b), big_m, name, "sync_freeze");
    };
    for (const auto& l : f.loads) {
      if (l.damaged) continue;
      freeze_var(sym::kLoad, l.id, '-', "load");
      if (l.controllable_dr)
        for (Phase p : l.phases.members()) {
          freeze_var(sym::kPload, l.id, phase_letter(p), "dr_p");
          freeze_var(sym::kQload, l.id, phase_letter(p), "dr_q");
        }
    }
    for (const auto& d : f.ders) {
      if (d.damaged) continue;
      for (Phase p : d.phases.members()) {
        freeze_var(p_symbol(d), d.id, phase_letter(p), "dg_p");
        freeze_var(q_symbol(d), d.id, phase_letter(p), "dg_q");
      }
    }
    for (const auto& b : p_.blocks.blocks) freeze_var(sym::kBlock, block_name(b.id), '-', "block");
    for (const auto& b : f.branches)
      if (b.switchable && !b.damaged) freeze_var(sym::kBranch, b.id, '-', "switch");
  }
}

void RestorationBuilder::build_demand_response() {
  auto& m = p_.model;
  const auto& f = p_.feeder;
  for (int t = 1; t <= p_.n_steps; ++t) {
    for (const auto& l : f.loads) {
      if (!l.controllable_dr || l.damaged) continue;
      const VarId x = var(sym::kLoad, l.id, '-', t);
      const double mult = l.multiplier_at(t);
      for (Phase p : l.phases.members()) {
        const char pl = phase_letter(p);
        const double pn = l.p[index_of(p)] * mult, qn = l.q[index_of(p)] * mult;
        const VarId pv = var(sym::kPload, l.id, pl, t), qv = var(sym::kQload, l.id, pl, t);
        for (auto [v, nominal, what] : {std::tuple{pv, pn, "p"}, std::tuple{qv, qn, "q"}}) {
          const double a = l.dr_min_fraction * nominal, b = l.dr_max_fraction * nominal;
          m.add_constraint(row_name("dr_limits", {l.id, what, ph(p), "lo"}, t), E::var(v) - E::var(x, std::min(a, b)),
                           Sense::GreaterEqual, 0.0, "dr_limits");
          m.add_constraint(row_name("dr_limits", {l.id, what, ph(p), "hi"}, t), E::var(v) - E::var(x, std::max(a, b)),
                           Sense::LessEqual, 0.0, "dr_limits");
        }
        // fixed power factor: Q * P_nominal = P * Q_nominal
        if (pn != 0.0)
          m.add_constraint(row_name("dr_power_factor", {l.id, ph(p)}, t), E::var(qv, pn) - E::var(pv, qn), Sense::Equal,
                           0.0, "dr_power_factor");
        if (t > 1) {
          m.add_constraint(row_name("dr_monotone", {l.id, "p", ph(p)}, t),
                           E::var(pv, pn >= 0 ? 1.0 : -1.0) - E::var(var(sym::kPload, l.id, pl, t - 1), pn >= 0 ? 1.0 : -1.0),
                           Sense::GreaterEqual, 0.0, "dr_monotone");
          m.add_constraint(row_name("dr_monotone", {l.id, "q", ph(p)}, t),
                           E::var(qv, qn >= 0 ? 1.0 : -1.0) - E::var(var(sym::kQload, l.id, pl, t - 1), qn >= 0 ? 1.0 : -1.0),
                           Sense::GreaterEqual, 0.0, "dr_monotone");
        }
      }
    }
  }
}

void RestorationBuilder::build_unbalance() {
  auto& m = p_.model;
  const auto& f = p_.feeder;
  const auto& c = p_.config;
  const std::pair<Phase, Phase> pairs[] = {{Phase::A, Phase::B}, {Phase::B, Phase::C}, {Phase::A, Phase::C}};
  for (int t = 1; t <= p_.n_steps; ++t) {
    if (std::isfinite(c.load_unbalance_limit)) {
      std::array<E, 3> per_phase;
      E total;
      for (std::size_t l = 0; l < f.loads.size(); ++l) {
        if (f.loads[l].damaged) continue;
        for (Phase p : f.loads[l].phases.members()) {
          per_phase[index_of(p)] += load_phase_power(l, p, t);
          total += load_phase_power(l, p, t);
        }
      }
      const double k = c.load_unbalance_limit / 3.0;
      for (auto [p, q] : pairs) {
        const E diff = per_phase[index_of(p)] - per_phase[index_of(q)];
        m.add_constraint(row_name("load_unbalance", {ph(p) + ph(q), "pos"}, t), diff - k * total, Sense::LessEqual, 0.0,
                         "load_unbalance");
        m.add_constraint(row_name("load_unbalance", {ph(p) + ph(q), "neg"}, t), (-1.0) * diff - k * total,
                         Sense::LessEqual, 0.0, "load_unbalance");
      }
    }
    if (std::isfinite(c.dg_phase_unbalance_limit)) {
      for (const auto& d : f.ders) {
        if (d.kind != DerKind::Droop || d.damaged || d.phases.size() < 2) continue;
        const double bound = c.dg_phase_unbalance_limit * d.p_max / 3.0;
        for (auto [p, q] : pairs) {
          if (!d.phases.contains(p) || !d.phases.contains(q)) continue;
          const E diff = E::var(var(sym::kPref, d.id, phase_letter(p), t)) - E::var(var(sym::kPref, d.id, phase_letter(q), t));
          m.add_constraint(row_name("dg_unbalance", {d.id, ph(p) + ph(q), "pos"}, t), diff, Sense::LessEqual, bound,
                           "dg_unbalance");
          m.add_constraint(row_name("dg_unbalance", {d.id, ph(p) + ph(q), "neg"}, t), diff, Sense::GreaterEqual, -bound,
                           "dg_unbalance");
        }
      }
    }
  }
}

RestorationProblem assemble(const FeederModel& feeder, const ScenarioConfig& config) {
  int steps = config.n_steps.value_or(0);
  if (config.n_steps && steps < 1) throw FormulationError("n_steps must be at least 1");
  if (!config.n_steps) {
    try {
      steps = analyze(feeder).estimate.generous;
    } catch (const GraphError& e) {
      throw FormulationError(std::string("cannot size the horizon: ") + e.what());
    }
  }
  RestorationBuilder b(feeder, config, steps);
  b.build_objective();
  b.build_initial_sequencing();
  b.build_connectivity();
  b.build_power_flow();
  b.build_der_constraints();
  b.build_demand_response();
  b.build_unbalance();
  return b.take();
}

}  // namespace mgrestore
