#include "mgrestore/solution_audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "mgrestore/graph_analysis.hpp"
#include "mgrestore/network_matrices.hpp"
#include "mgrestore/powerflow_linearization.hpp"
#include "mgrestore/restoration_formulation.hpp"

namespace mgrestore {

using json = nlohmann::json;

namespace {

constexpr std::size_t kKeptViolations = 25;

const char* p_symbol(const Der& d) { return d.kind == DerKind::Droop ? sym::kPref : sym::kPdg; }
const char* q_symbol(const Der& d) { return d.kind == DerKind::Droop ? sym::kQref : sym::kQdg; }

std::string step_tag(int t) { return " at t" + std::to_string(t); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

class Checker {
 public:
  Checker(AuditReport& r, double tol) : r_(r), tol_(tol) {}

  FamilyResult& family(const std::string& name) { return r_.families[name]; }

  /// Records a nonnegative excess; anything above tolerance is a violation.
  template <class Describe>
  void excess(const std::string& fam, double amount, Describe&& describe) {
    FamilyResult& f = r_.families[fam];
    ++f.checked;
    const double a = std::isnan(amount) ? INFINITY : std::max(0.0, amount);
    f.max_residual = std::max(f.max_residual, a);
    if (a > tol_) {
      ++f.violation_count;
      if (f.violations.size() < kKeptViolations) f.violations.push_back(describe() + " (by " + num(a) + ")");
    }
  }

  template <class Describe>
  void require(const std::string& fam, bool ok, Describe&& describe) {
    FamilyResult& f = r_.families[fam];
    ++f.checked;
    if (ok) return;
    f.max_residual = std::max(f.max_residual, 1.0);
    ++f.violation_count;
    if (f.violations.size() < kKeptViolations) f.violations.push_back(describe());
  }

  /// Excess of `v` outside [lo, hi].
  static double outside(double v, double lo, double hi) { return std::max(lo - v, v - hi); }

 private:
  AuditReport& r_;
  double tol_;
};

bool black_start_unit(const Der& d) { return d.black_start && !d.damaged && d.kind == DerKind::Droop; }

double phase_total(const PhaseValues& v, const PhaseSet& phases) {
  double s = 0.0;
  for (Phase p : phases.members()) s += v[index_of(p)];
  return s;
}

}  // namespace

double RestorationPlan::served_energy_kw() const {
  double e = 0.0;
  for (const auto& s : steps) e += phase_sum(s.restored_p);
  return e * kva_per_phase * step_interval;
}

void RestorationPlan::refresh_totals() {
  for (auto& s : steps) {
    s.restored_p = s.restored_q = s.dispatch_p = s.dispatch_q = PhaseValues{};
    for (std::size_t l = 0; l < s.load_p.size(); ++l)
      for (std::size_t k = 0; k < 3; ++k) {
        s.restored_p[k] += s.load_p[l][k];
        s.restored_q[k] += s.load_q[l][k];
      }
    for (std::size_t g = 0; g < s.dg_p.size(); ++g)
      for (std::size_t k = 0; k < 3; ++k) {
        s.dispatch_p[k] += s.dg_p[g][k];
        s.dispatch_q[k] += s.dg_q[g][k];
      }
  }
}

RestorationPlan extract_plan(const RestorationProblem& problem, const std::vector<double>& values,
                             double integrality_tol) {
  const MilpModel& m = problem.model;
  if (values.size() != m.num_variables())
    throw AuditError("assignment has " + std::to_string(values.size()) + " values for " +
                     std::to_string(m.num_variables()) + " variables");
  RestorationPlan plan;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (m.variables()[i].type != VarType::Binary) continue;
    const double d = std::min(std::abs(values[i]), std::abs(values[i] - 1.0));
    plan.max_integrality_deviation = std::max(plan.max_integrality_deviation, d);
    if (!(d <= integrality_tol))
      throw AuditError("binary '" + m.variables()[i].name + "' = " + num(values[i]) + " is not integral");
  }

  const FeederModel& f = problem.feeder;
  plan.feeder = f.name;
  plan.kva_per_phase = f.base.kva_per_phase();
  plan.step_interval = f.step_interval;
  for (const auto& n : f.nodes) plan.node_ids.push_back(n.id);
  for (const auto& b : f.branches) {
    plan.branch_ids.push_back(b.id);
    plan.branch_switchable.push_back(b.switchable);
  }
  for (const auto& d : f.ders) plan.der_ids.push_back(d.id);
  for (const auto& l : f.loads) plan.load_ids.push_back(l.id);
  for (const auto& b : problem.blocks.blocks) plan.blocks.push_back(b.nodes);

  auto value = [&](const char* s, const std::string& el, char ph, int t) {
    return values[static_cast<std::size_t>(problem.index.at(s, el, ph, t))];
  };
  auto bit = [&](const char* s, const std::string& el, int t) { return value(s, el, '-', t) >= 0.5; };

  for (int t = 1; t <= problem.n_steps; ++t) {
    PlanStep s;
    s.t = t;
    for (const auto& n : f.nodes) {
      s.node_on.push_back(bit(sym::kNode, n.id, t));
      std::array<std::complex<double>, 3> v{};
      for (Phase p : n.phases.members())
        v[index_of(p)] = {value(sym::kVre, n.id, phase_letter(p), t), value(sym::kVim, n.id, phase_letter(p), t)};
      s.voltage.push_back(v);
    }
    for (const auto& b : problem.blocks.blocks) s.block_on.push_back(bit(sym::kBlock, block_name(b.id), t));
    for (const auto& b : f.branches) s.branch_on.push_back(bit(sym::kBranch, b.id, t));
    for (const auto& d : f.ders) {
      s.dg_on.push_back(bit(sym::kDg, d.id, t));
      PhaseValues pv{}, qv{};
      for (Phase p : d.phases.members()) {
        pv[index_of(p)] = value(p_symbol(d), d.id, phase_letter(p), t);
        qv[index_of(p)] = value(q_symbol(d), d.id, phase_letter(p), t);
      }
      s.dg_p.push_back(pv);
      s.dg_q.push_back(qv);
    }
    for (const auto& l : f.loads) {
      const bool on = bit(sym::kLoad, l.id, t);
      s.load_on.push_back(on);
      PhaseValues pv{}, qv{};
      for (Phase p : l.phases.members()) {
        const std::size_t k = index_of(p);
        if (l.controllable_dr) {
          pv[k] = value(sym::kPload, l.id, phase_letter(p), t);
          qv[k] = value(sym::kQload, l.id, phase_letter(p), t);
        } else if (on) {
          pv[k] = l.p[k] * l.multiplier_at(t);
          qv[k] = l.q[k] * l.multiplier_at(t);
        }
      }
      s.load_p.push_back(pv);
      s.load_q.push_back(qv);
    }
    plan.steps.push_back(std::move(s));
  }
  plan.refresh_totals();
  return plan;
}

bool AuditReport::pass() const { return failed_families().empty(); }

std::vector<std::string> AuditReport::failed_families() const {
  std::vector<std::string> out;
  for (const auto& [name, f] : families)
    if (f.violation_count > 0) out.push_back(name);
  return out;
}

AuditReport audit(const RestorationPlan& plan, const FeederModel& feeder, const ScenarioConfig& config) {
  AuditReport r;
  r.tolerance = config.residual_tolerance;
  Checker ck(r, r.tolerance);
  const FeederModel f = to_per_unit(feeder);
  const BusBlockGraph g = reduce_to_bus_blocks(f);
  const auto lookup = f.node_lookup();
  const int T = plan.n_steps();

  // shape: the plan must describe this feeder
  bool shape_ok = plan.node_ids.size() == f.nodes.size() && plan.branch_ids.size() == f.branches.size() &&
                  plan.der_ids.size() == f.ders.size() && plan.load_ids.size() == f.loads.size() &&
                  plan.blocks.size() == g.blocks.size();
  for (std::size_t i = 0; shape_ok && i < f.nodes.size(); ++i) shape_ok = plan.node_ids[i] == f.nodes[i].id;
  for (std::size_t i = 0; shape_ok && i < f.branches.size(); ++i) shape_ok = plan.branch_ids[i] == f.branches[i].id;
  for (std::size_t i = 0; shape_ok && i < f.ders.size(); ++i) shape_ok = plan.der_ids[i] == f.ders[i].id;
  for (std::size_t i = 0; shape_ok && i < f.loads.size(); ++i) shape_ok = plan.load_ids[i] == f.loads[i].id;
  for (const auto& s : plan.steps) {
    shape_ok = shape_ok && s.node_on.size() == f.nodes.size() && s.voltage.size() == f.nodes.size() &&
               s.block_on.size() == g.blocks.size() && s.branch_on.size() == f.branches.size() &&
               s.dg_on.size() == f.ders.size() && s.dg_p.size() == f.ders.size() && s.dg_q.size() == f.ders.size() &&
               s.load_on.size() == f.loads.size() && s.load_p.size() == f.loads.size() &&
               s.load_q.size() == f.loads.size();
  }
  ck.require("plan_shape", shape_ok, [] { return std::string("plan does not match the feeder's elements"); });
  if (!shape_ok) return r;

  auto node_on = [&](const PlanStep& s, const std::string& id) { return s.node_on[lookup.at(id)]; };
  const double tan_dev = std::tan(config.angle_deviation_limit_deg * std::numbers::pi / 180.0);

  for (int ti = 0; ti < T; ++ti) {
    const PlanStep& s = plan.steps[static_cast<std::size_t>(ti)];
    const PlanStep* prev = ti > 0 ? &plan.steps[static_cast<std::size_t>(ti - 1)] : nullptr;
    const int t = ti + 1;
    const std::string at = step_tag(t);

    // startup
    if (t == 1) {
      int started = 0;
      for (std::size_t d = 0; d < f.ders.size(); ++d) {
        if (black_start_unit(f.ders[d]))
          started += s.dg_on[d] ? 1 : 0;
        else
          ck.require("startup", !s.dg_on[d], [&] { return "DG " + f.ders[d].id + " on" + at; });
      }
      ck.require("startup", started == 1,
                 [&] { return std::to_string(started) + " black-start units on" + at + ", expected 1"; });
      for (std::size_t b = 0; b < f.branches.size(); ++b)
        if (f.branches[b].switchable && !f.branches[b].damaged)
          ck.require("startup", !s.branch_on[b], [&] { return "switch " + f.branches[b].id + " closed" + at; });
    }

    // damaged elements stay out
    for (std::size_t b = 0; b < f.branches.size(); ++b)
      if (f.branches[b].damaged)
        ck.require("damaged", !s.branch_on[b], [&] { return "branch " + f.branches[b].id + " in service" + at; });
    for (std::size_t d = 0; d < f.ders.size(); ++d)
      if (f.ders[d].damaged)
        ck.require("damaged", !s.dg_on[d], [&] { return "DG " + f.ders[d].id + " on" + at; });
    for (std::size_t l = 0; l < f.loads.size(); ++l)
      if (f.loads[l].damaged)
        ck.require("damaged", !s.load_on[l], [&] { return "load " + f.loads[l].id + " served" + at; });

    // hosts and branch ends
    for (std::size_t d = 0; d < f.ders.size(); ++d)
      ck.require("host", !s.dg_on[d] || node_on(s, f.ders[d].node),
                 [&] { return "DG " + f.ders[d].id + " on at a dead node" + at; });
    for (std::size_t l = 0; l < f.loads.size(); ++l) {
      const Load& ld = f.loads[l];
      if (ld.damaged) continue;
      if (ld.is_switchable())
        ck.require("host", !s.load_on[l] || node_on(s, ld.node), [&] { return "load " + ld.id + " on at a dead node" + at; });
      else
        ck.require("host", s.load_on[l] == node_on(s, ld.node),
                   [&] { return "fixed load " + ld.id + " differs from its node" + at; });
    }
    for (std::size_t b = 0; b < f.branches.size(); ++b) {
      const Branch& br = f.branches[b];
      if (br.damaged) continue;
      const bool ends_on = node_on(s, br.from) && node_on(s, br.to);
      if (br.switchable)
        ck.require("branch_ends", !s.branch_on[b] || ends_on, [&] { return "switch " + br.id + " closed onto a dead end" + at; });
      else
        ck.require("branch_ends", s.branch_on[b] == node_on(s, br.from) && s.branch_on[b] == node_on(s, br.to),
                   [&] { return "line " + br.id + " status differs from its ends" + at; });
    }

    // blocks
    for (const auto& blk : g.blocks)
      for (const auto& n : blk.nodes)
        ck.require("block_membership", node_on(s, n) == s.block_on[static_cast<std::size_t>(blk.id)],
                   [&] { return "node " + n + " differs from block K" + std::to_string(blk.id) + at; });
    for (const auto& blk : g.blocks) {
      const auto b = static_cast<std::size_t>(blk.id);
      if (!s.block_on[b]) continue;
      if (t == 1) {
        bool has_starter = false;
        for (std::size_t d = 0; d < f.ders.size(); ++d)
          has_starter = has_starter || (black_start_unit(f.ders[d]) && s.dg_on[d] && g.block_of.at(f.ders[d].node) == blk.id);
        ck.require("reach", has_starter, [&] { return "block K" + std::to_string(blk.id) + " live without its starter" + at; });
        continue;
      }
      if (prev->block_on[b]) continue;
      bool fed = false;
      for (const auto& e : g.edges) {
        if (e.a != blk.id && e.b != blk.id) continue;
        const int other = e.a == blk.id ? e.b : e.a;
        const std::size_t bi = static_cast<std::size_t>(
            std::find(plan.branch_ids.begin(), plan.branch_ids.end(), e.branch) - plan.branch_ids.begin());
        fed = fed || (s.branch_on[bi] && prev->block_on[static_cast<std::size_t>(other)]);
      }
      ck.require("reach", fed, [&] { return "block K" + std::to_string(blk.id) + " energized with no live neighbor" + at; });
    }

    // statuses never revert
    if (prev) {
      for (std::size_t i = 0; i < f.nodes.size(); ++i)
        ck.require("monotonicity", !prev->node_on[i] || s.node_on[i], [&] { return "node " + f.nodes[i].id + " de-energized" + at; });
      for (std::size_t i = 0; i < g.blocks.size(); ++i)
        ck.require("monotonicity", !prev->block_on[i] || s.block_on[i], [&] { return "block K" + std::to_string(i) + " de-energized" + at; });
      for (std::size_t i = 0; i < f.branches.size(); ++i)
        ck.require("monotonicity", !prev->branch_on[i] || s.branch_on[i], [&] { return "branch " + f.branches[i].id + " opened" + at; });
      for (std::size_t i = 0; i < f.ders.size(); ++i)
        ck.require("monotonicity", !prev->dg_on[i] || s.dg_on[i], [&] { return "DG " + f.ders[i].id + " switched off" + at; });
      for (std::size_t i = 0; i < f.loads.size(); ++i)
        ck.require("monotonicity", !prev->load_on[i] || s.load_on[i], [&] { return "load " + f.loads[i].id + " dropped" + at; });
    }

    // voltages: inside the sector when live, zero when dead
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
      const Node& n = f.nodes[i];
      for (Phase p : n.phases.members()) {
        const auto v = s.voltage[i][index_of(p)];
        const double th = nominal_angle(p);
        const double proj = v.real() * std::cos(th) + v.imag() * std::sin(th);
        const double perp = -v.real() * std::sin(th) + v.imag() * std::cos(th);
        auto what = [&] { return "node " + n.id + "." + phase_letter(p) + " voltage" + at; };
        if (s.node_on[i]) {
          ck.excess("voltage", Checker::outside(proj, config.v_min, config.v_max), what);
          ck.excess("voltage", std::abs(perp) - tan_dev * proj, what);
        } else {
          ck.excess("voltage", std::abs(v), what);
        }
      }
    }

    // current balance, linear and exact
    {
      std::vector<bool> closed(f.branches.size());
      for (std::size_t b = 0; b < f.branches.size(); ++b) closed[b] = s.branch_on[b] && !f.branches[b].damaged;
      const AdmittanceMatrix adm = assemble_bus_admittance(f, closed, false);
      const PhaseNodeIndex& idx = adm.index;
      Eigen::VectorXcd v(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) v(static_cast<Eigen::Index>(k)) = s.voltage[idx.at(k).first][index_of(idx.at(k).second)];
      Eigen::VectorXcd lin = adm.y * v;
      if (config.include_shunts) {
        for (std::size_t b = 0; b < f.branches.size(); ++b) {
          const Branch& br = f.branches[b];
          if (!closed[b] || br.switchable) continue;
          for (const auto* end : {&br.from, &br.to}) {
            const std::size_t ni = lookup.at(*end);
            for (Phase p : br.phases.members())
              for (Phase q : br.phases.members())
                lin(idx.find(ni, p)) += 0.5 * br.shunt_admittance(index_of(p), index_of(q)) * s.voltage[ni][index_of(q)];
          }
        }
      }
      Eigen::VectorXcd exact = lin;
      for (std::size_t l = 0; l < f.loads.size(); ++l) {
        const Load& ld = f.loads[l];
        if (ld.damaged || !s.load_on[l]) continue;
        const std::size_t ni = lookup.at(ld.node);
        const LinearInjection li = linearize_zip_injection(ld);
        for (Phase p : ld.phases.members()) {
          const std::size_t k = index_of(p);
          const int slot = idx.find(ni, p);
          const auto vk = s.voltage[ni][k];
          if (ld.controllable_dr) {
            const std::complex<double> sp{s.load_p[l][k], s.load_q[l][k]};
            lin(slot) += li.phase[k].per_p * sp.real() + li.phase[k].per_q * sp.imag();
            if (vk != 0.0) exact(slot) += exact_zip_current(sp, {0.0, 0.0, 1.0}, vk);
          } else {
            const double mult = ld.multiplier_at(t);
            lin(slot) += mult * li.phase[k].evaluate(vk);
            if (vk != 0.0) exact(slot) += exact_zip_current(mult * std::complex<double>(ld.p[k], ld.q[k]), ld.zip, vk);
          }
        }
      }
      // DG injections enter both forms as the modeled source current
      for (std::size_t d = 0; d < f.ders.size(); ++d) {
        const Der& dg = f.ders[d];
        if (dg.damaged) continue;
        const std::size_t ni = lookup.at(dg.node);
        for (Phase p : dg.phases.members()) {
          const std::size_t k = index_of(p);
          const auto i = setpoint_current({s.dg_p[d][k], s.dg_q[d][k]}, nominal_phasor(p));
          lin(idx.find(ni, p)) -= i;
          exact(idx.find(ni, p)) -= i;
        }
      }
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& [ni, p] = idx.at(k);
        const auto e = static_cast<Eigen::Index>(k);
        const double res = std::max(std::abs(lin(e).real()), std::abs(lin(e).imag()));
        r.max_linear_residual = std::max(r.max_linear_residual, res);
        ck.excess("current_balance", res, [&] { return "node " + f.nodes[ni].id + "." + phase_letter(p) + at; });
        if (s.node_on[ni]) r.exact_zip_residual = std::max(r.exact_zip_residual, std::abs(exact(e)));
      }

      if (config.enforce_ampacity) {
        for (std::size_t b = 0; b < f.branches.size(); ++b) {
          const Branch& br = f.branches[b];
          if (!closed[b]) continue;
          const Matrix3c y = branch_admittance(br);
          const std::size_t fi = lookup.at(br.from), ti2 = lookup.at(br.to);
          for (Phase p : br.phases.members()) {
            const double imax = br.ampacity[index_of(p)];
            if (!(imax > 0.0)) continue;
            std::complex<double> i{0.0, 0.0};
            for (Phase q : br.phases.members())
              i += y(index_of(p), index_of(q)) * (s.voltage[fi][index_of(q)] - s.voltage[ti2][index_of(q)]);
            double worst = -INFINITY;
            for (int j = 0; j < config.polygon_sides; ++j) {
              const double a = 2.0 * std::numbers::pi * j / config.polygon_sides;
              worst = std::max(worst, std::cos(a) * i.real() + std::sin(a) * i.imag() - imax);
            }
            ck.excess("ampacity", worst, [&] { return "branch " + br.id + "." + phase_letter(p) + at; });
          }
        }
      }
    }

    // DG output limits and ramping
    for (std::size_t d = 0; d < f.ders.size(); ++d) {
      const Der& dg = f.ders[d];
      const double x = s.dg_on[d] ? 1.0 : 0.0;
      const double n = static_cast<double>(dg.phases.size());
      for (bool reactive : {false, true}) {
        const PhaseValues& out = reactive ? s.dg_q[d] : s.dg_p[d];
        const double lo = reactive ? dg.q_min : dg.p_min, hi = reactive ? dg.q_max : dg.p_max;
        const std::string what = std::string(reactive ? "Q" : "P") + " of DG " + dg.id;
        for (Phase p : dg.phases.members()) {
          const double v = out[index_of(p)];
          auto desc = [&] { return what + "." + phase_letter(p) + at; };
          switch (dg.kind) {
            case DerKind::Droop:
              ck.excess("dg_limits", Checker::outside(v, std::min(lo, 0.0) * x, std::max(hi, 0.0) * x), desc);
              break;
            case DerKind::PqDispatchable:
              ck.excess("dg_limits", Checker::outside(v, lo / n * x, hi / n * x), desc);
              break;
            case DerKind::PqNondispatchable: {
              const double fc = (reactive ? dg.forecast_q_at(t) : dg.forecast_p_at(t))[index_of(p)];
              ck.excess("dg_limits", std::abs(v - fc * x), desc);
              break;
            }
          }
        }
        const double total = phase_total(out, dg.phases);
        if (dg.kind == DerKind::Droop)
          ck.excess("dg_limits", Checker::outside(total, lo * x, hi * x), [&] { return what + " total" + at; });
        const double before = prev ? phase_total(reactive ? prev->dg_q[d] : prev->dg_p[d], dg.phases) : 0.0;
        const double cap = dg.ramp_fraction * std::max(std::abs(lo), std::abs(hi));
        ck.excess("ramp", std::abs(total - before) - cap, [&] { return what + at; });
      }
    }

    // one droop unit joins per step, and nothing else moves while it does
    if (prev) {
      std::vector<std::size_t> joining;
      for (std::size_t d = 0; d < f.ders.size(); ++d)
        if (f.ders[d].kind == DerKind::Droop && !f.ders[d].damaged && s.dg_on[d] && !prev->dg_on[d]) joining.push_back(d);
      ck.require("sync", joining.size() <= 1,
                 [&] { return std::to_string(joining.size()) + " droop units synchronize" + at; });
      if (joining.size() == 1) {
        auto same = [&](bool a, bool b, const std::string& what) {
          ck.require("sync", a == b, [&] { return what + " changes during synchronization" + at; });
        };
        auto same_value = [&](double a, double b, const std::string& what) {
          ck.excess("sync", std::abs(a - b), [&] { return what + " changes during synchronization" + at; });
        };
        for (std::size_t l = 0; l < f.loads.size(); ++l) {
          if (f.loads[l].damaged) continue;
          same(s.load_on[l], prev->load_on[l], "load " + f.loads[l].id);
          if (f.loads[l].controllable_dr)
            for (std::size_t k = 0; k < 3; ++k) {
              same_value(s.load_p[l][k], prev->load_p[l][k], "DR load " + f.loads[l].id);
              same_value(s.load_q[l][k], prev->load_q[l][k], "DR load " + f.loads[l].id);
            }
        }
        for (std::size_t d = 0; d < f.ders.size(); ++d) {
          if (f.ders[d].damaged) continue;
          for (std::size_t k = 0; k < 3; ++k) {
            same_value(s.dg_p[d][k], prev->dg_p[d][k], "output of DG " + f.ders[d].id);
            same_value(s.dg_q[d][k], prev->dg_q[d][k], "output of DG " + f.ders[d].id);
          }
        }
        for (std::size_t b = 0; b < g.blocks.size(); ++b) same(s.block_on[b], prev->block_on[b], "block K" + std::to_string(b));
        for (std::size_t b = 0; b < f.branches.size(); ++b)
          if (f.branches[b].switchable && !f.branches[b].damaged)
            same(s.branch_on[b], prev->branch_on[b], "switch " + f.branches[b].id);

        SyncCheck sc;
        sc.t = t;
        sc.dg = f.ders[joining.front()].id;
        sc.kw_before = phase_sum(prev->restored_p) * plan.kva_per_phase;
        sc.kw_after = phase_sum(s.restored_p) * plan.kva_per_phase;
        sc.kvar_before = phase_sum(prev->restored_q) * plan.kva_per_phase;
        sc.kvar_after = phase_sum(s.restored_q) * plan.kva_per_phase;
        sc.unchanged = std::abs(phase_sum(s.restored_p) - phase_sum(prev->restored_p)) <= r.tolerance &&
                       std::abs(phase_sum(s.restored_q) - phase_sum(prev->restored_q)) <= r.tolerance;
        ck.require("sync", sc.unchanged, [&] { return "restored totals change while " + sc.dg + " synchronizes" + at; });
        r.sync_steps.push_back(sc);
      }
    }

    // demand response
    for (std::size_t l = 0; l < f.loads.size(); ++l) {
      const Load& ld = f.loads[l];
      if (ld.damaged) {
        for (std::size_t k = 0; k < 3; ++k)
          ck.excess("demand_response", std::max(std::abs(s.load_p[l][k]), std::abs(s.load_q[l][k])),
                    [&] { return "damaged load " + ld.id + " draws power" + at; });
        continue;
      }
      if (!ld.controllable_dr) {
        for (Phase p : ld.phases.members()) {
          const std::size_t k = index_of(p);
          const double x = s.load_on[l] ? ld.multiplier_at(t) : 0.0;
          ck.excess("load_service", std::max(std::abs(s.load_p[l][k] - ld.p[k] * x), std::abs(s.load_q[l][k] - ld.q[k] * x)),
                    [&] { return "load " + ld.id + "." + phase_letter(p) + " served power" + at; });
        }
        continue;
      }
      const double x = s.load_on[l] ? 1.0 : 0.0;
      for (Phase p : ld.phases.members()) {
        const std::size_t k = index_of(p);
        const double pn = ld.p[k] * ld.multiplier_at(t), qn = ld.q[k] * ld.multiplier_at(t);
        auto desc = [&] { return "DR load " + ld.id + "." + phase_letter(p) + at; };
        for (auto [v, nominal] : {std::pair{s.load_p[l][k], pn}, std::pair{s.load_q[l][k], qn}}) {
          const double a = ld.dr_min_fraction * nominal * x, b = ld.dr_max_fraction * nominal * x;
          ck.excess("demand_response", Checker::outside(v, std::min(a, b), std::max(a, b)), desc);
        }
        if (pn != 0.0) ck.excess("demand_response", std::abs(s.load_q[l][k] * pn - s.load_p[l][k] * qn), desc);
        if (prev) {
          const double sp = pn >= 0 ? 1.0 : -1.0, sq = qn >= 0 ? 1.0 : -1.0;
          ck.excess("dr_monotonicity", sp * (prev->load_p[l][k] - s.load_p[l][k]),
                    [&] { return "DR load " + ld.id + "." + phase_letter(p) + " P reduced" + at; });
          ck.excess("dr_monotonicity", sq * (prev->load_q[l][k] - s.load_q[l][k]),
                    [&] { return "DR load " + ld.id + "." + phase_letter(p) + " Q reduced" + at; });
        }
      }
    }

    // phase balance
    if (std::isfinite(config.load_unbalance_limit)) {
      PhaseValues served{};
      for (std::size_t l = 0; l < f.loads.size(); ++l)
        if (!f.loads[l].damaged)
          for (Phase p : f.loads[l].phases.members()) served[index_of(p)] += s.load_p[l][index_of(p)];
      const double bound = config.load_unbalance_limit / 3.0 * phase_sum(served);
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b)
          ck.excess("load_unbalance", std::abs(served[a] - served[b]) - bound,
                    [&] { return std::string("phases ") + phase_letter(kAllPhases[a]) + phase_letter(kAllPhases[b]) + at; });
    }
    if (std::isfinite(config.dg_phase_unbalance_limit)) {
      for (std::size_t d = 0; d < f.ders.size(); ++d) {
        const Der& dg = f.ders[d];
        if (dg.kind != DerKind::Droop || dg.damaged) continue;
        const auto ph = dg.phases.members();
        for (std::size_t a = 0; a < ph.size(); ++a)
          for (std::size_t b = a + 1; b < ph.size(); ++b)
            ck.excess("dg_unbalance",
                      std::abs(s.dg_p[d][index_of(ph[a])] - s.dg_p[d][index_of(ph[b])]) -
                          config.dg_phase_unbalance_limit * dg.p_max / 3.0,
                      [&] { return "DG " + dg.id + at; });
      }
    }
  }

  // totals must be the sums of their members
  for (const auto& s : plan.steps) {
    PhaseValues rp{}, rq{}, dp{}, dq{};
    for (std::size_t l = 0; l < f.loads.size(); ++l)
      for (std::size_t k = 0; k < 3; ++k) {
        rp[k] += s.load_p[l][k];
        rq[k] += s.load_q[l][k];
      }
    for (std::size_t d = 0; d < f.ders.size(); ++d)
      for (std::size_t k = 0; k < 3; ++k) {
        dp[k] += s.dg_p[d][k];
        dq[k] += s.dg_q[d][k];
      }
    for (std::size_t k = 0; k < 3; ++k)
      ck.excess("totals",
                std::max({std::abs(rp[k] - s.restored_p[k]), std::abs(rq[k] - s.restored_q[k]),
                          std::abs(dp[k] - s.dispatch_p[k]), std::abs(dq[k] - s.dispatch_q[k])}),
                [&] { return "step totals" + step_tag(s.t); });
  }
  r.served_energy_kw = plan.served_energy_kw();
  return r;
}

std::string summarize(const RestorationPlan& plan) {
  std::ostringstream os;
  os << "step";
  for (const char* q : {"restored_kw", "restored_kvar", "dispatch_kw", "dispatch_kvar"})
    os << ',' << q << "_a," << q << "_b," << q << "_c," << q;
  os << ",closed_switches\n";
  const double k = plan.kva_per_phase;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const PlanStep& s = plan.steps[i];
    os << s.t;
    for (const PhaseValues* v : {&s.restored_p, &s.restored_q, &s.dispatch_p, &s.dispatch_q})
      os << ',' << num((*v)[0] * k) << ',' << num((*v)[1] * k) << ',' << num((*v)[2] * k) << ',' << num(phase_sum(*v) * k);
    os << ',';
    bool first = true;
    for (std::size_t b = 0; b < s.branch_on.size(); ++b) {
      const bool was = i > 0 && plan.steps[i - 1].branch_on[b];
      if (!s.branch_on[b] || was || !plan.branch_switchable[b]) continue;
      os << (first ? "" : ";") << plan.branch_ids[b];
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

std::string audit_report_json(const AuditReport& r) {
  json j;
  j["pass"] = r.pass();
  j["tolerance"] = r.tolerance;
  j["max_linear_residual"] = r.max_linear_residual;
  j["exact_zip_residual"] = r.exact_zip_residual;
  j["served_energy_kw"] = r.served_energy_kw;
  j["failed_families"] = r.failed_families();
  json fams = json::object();
  for (const auto& [name, fr] : r.families)
    fams[name] = {{"checked", fr.checked},
                  {"max_residual", fr.max_residual},
                  {"violation_count", fr.violation_count},
                  {"violations", fr.violations}};
  j["families"] = fams;
  json sync = json::array();
  for (const auto& s : r.sync_steps)
    sync.push_back({{"step", s.t},
                    {"dg", s.dg},
                    {"kw_before", s.kw_before},
                    {"kw_after", s.kw_after},
                    {"kvar_before", s.kvar_before},
                    {"kvar_after", s.kvar_after},
                    {"unchanged", s.unchanged}});
  j["sync_steps"] = sync;
  return j.dump(2);
}

namespace {

json phase_values(const PhaseValues& v) { return json::array({v[0], v[1], v[2]}); }

PhaseValues read_phase_values(const json& j) {
  if (!j.is_array() || j.size() != 3) throw AuditError("expected three phase values");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <class T>
json selected(const std::vector<bool>& on, const std::vector<T>& names) {
  json out = json::array();
  for (std::size_t i = 0; i < on.size(); ++i)
    if (on[i]) out.push_back(names[i]);
  return out;
}

std::vector<bool> flags_from(const json& j, const std::vector<std::string>& names, const char* what) {
  std::vector<bool> out(names.size(), false);
  for (const auto& v : j) {
    auto it = std::find(names.begin(), names.end(), v.get<std::string>());
    if (it == names.end()) throw AuditError(std::string("unknown ") + what + " '" + v.get<std::string>() + "'");
    out[static_cast<std::size_t>(it - names.begin())] = true;
  }
  return out;
}

}  // namespace

std::string plan_to_json(const RestorationPlan& plan) {
  json j;
  j["feeder"] = plan.feeder;
  j["kva_per_phase"] = plan.kva_per_phase;
  j["step_interval"] = plan.step_interval;
  j["max_integrality_deviation"] = plan.max_integrality_deviation;
  j["served_energy_kw"] = plan.served_energy_kw();
  j["nodes"] = plan.node_ids;
  j["branches"] = plan.branch_ids;
  j["switchable"] = plan.branch_switchable;
  j["ders"] = plan.der_ids;
  j["loads"] = plan.load_ids;
  j["blocks"] = plan.blocks;
  std::vector<std::string> block_names;
  for (std::size_t b = 0; b < plan.blocks.size(); ++b) block_names.push_back(block_name(static_cast<int>(b)));
  json steps = json::array();
  for (const auto& s : plan.steps) {
    json st;
    st["t"] = s.t;
    st["nodes_on"] = selected(s.node_on, plan.node_ids);
    st["blocks_on"] = selected(s.block_on, block_names);
    st["branches_on"] = selected(s.branch_on, plan.branch_ids);
    st["ders_on"] = selected(s.dg_on, plan.der_ids);
    st["loads_on"] = selected(s.load_on, plan.load_ids);
    json v = json::object();
    for (std::size_t i = 0; i < s.voltage.size(); ++i) {
      json ph = json::array();
      for (const auto& c : s.voltage[i]) ph.push_back(json::array({c.real(), c.imag()}));
      v[plan.node_ids[i]] = ph;
    }
    st["voltage"] = v;
    json dg = json::object(), ld = json::object();
    for (std::size_t d = 0; d < s.dg_p.size(); ++d)
      dg[plan.der_ids[d]] = {{"p", phase_values(s.dg_p[d])}, {"q", phase_values(s.dg_q[d])}};
    for (std::size_t l = 0; l < s.load_p.size(); ++l)
      ld[plan.load_ids[l]] = {{"p", phase_values(s.load_p[l])}, {"q", phase_values(s.load_q[l])}};
    st["dispatch"] = dg;
    st["served"] = ld;
    st["restored_kw"] = phase_sum(s.restored_p) * plan.kva_per_phase;
    st["restored_kvar"] = phase_sum(s.restored_q) * plan.kva_per_phase;
    steps.push_back(st);
  }
  j["steps"] = steps;
  return j.dump(1);
}

RestorationPlan plan_from_json(std::string_view text) {
  RestorationPlan plan;
  try {
    const json j = json::parse(text);
    plan.feeder = j.at("feeder").get<std::string>();
    plan.kva_per_phase = j.at("kva_per_phase").get<double>();
    plan.step_interval = j.at("step_interval").get<double>();
    plan.max_integrality_deviation = j.value("max_integrality_deviation", 0.0);
    plan.node_ids = j.at("nodes").get<std::vector<std::string>>();
    plan.branch_ids = j.at("branches").get<std::vector<std::string>>();
    plan.branch_switchable = j.at("switchable").get<std::vector<bool>>();
    plan.der_ids = j.at("ders").get<std::vector<std::string>>();
    plan.load_ids = j.at("loads").get<std::vector<std::string>>();
    plan.blocks = j.at("blocks").get<std::vector<std::vector<std::string>>>();
    std::vector<std::string> block_names;
    for (std::size_t b = 0; b < plan.blocks.size(); ++b) block_names.push_back(block_name(static_cast<int>(b)));
    for (const auto& st : j.at("steps")) {
      PlanStep s;
      s.t = st.at("t").get<int>();
      s.node_on = flags_from(st.at("nodes_on"), plan.node_ids, "node");
      s.block_on = flags_from(st.at("blocks_on"), block_names, "block");
      s.branch_on = flags_from(st.at("branches_on"), plan.branch_ids, "branch");
      s.dg_on = flags_from(st.at("ders_on"), plan.der_ids, "DG");
      s.load_on = flags_from(st.at("loads_on"), plan.load_ids, "load");
      for (const auto& id : plan.node_ids) {
        const auto& ph = st.at("voltage").at(id);
        std::array<std::complex<double>, 3> v{};
        for (std::size_t k = 0; k < 3; ++k) v[k] = {ph.at(k).at(0).get<double>(), ph.at(k).at(1).get<double>()};
        s.voltage.push_back(v);
      }
      for (const auto& id : plan.der_ids) {
        s.dg_p.push_back(read_phase_values(st.at("dispatch").at(id).at("p")));
        s.dg_q.push_back(read_phase_values(st.at("dispatch").at(id).at("q")));
      }
      for (const auto& id : plan.load_ids) {
        s.load_p.push_back(read_phase_values(st.at("served").at(id).at("p")));
        s.load_q.push_back(read_phase_values(st.at("served").at(id).at("q")));
      }
      plan.steps.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw AuditError(std::string("malformed plan: ") + e.what());
  }
  plan.refresh_totals();
  return plan;
}

}  // namespace mgrestore
