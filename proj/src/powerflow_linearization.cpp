#include "mgrestore/powerflow_linearization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mgrestore {

namespace {

constexpr cplx kJ{0.0, 1.0};

Matrix2d real_jacobian(cplx d_re, cplx d_im) {
  Matrix2d m;
  m << d_re.real(), d_im.real(), d_re.imag(), d_im.imag();
  return m;
}

}  // namespace

cplx PhaseInjection::evaluate(cplx v) const {
  Eigen::Vector2d lin = jacobian * Eigen::Vector2d(v.real(), v.imag());
  return c0 + cplx(lin(0), lin(1));
}

cplx setpoint_current(cplx s, cplx v0) {
  const double mag2 = std::norm(v0);
  if (mag2 == 0.0) throw std::invalid_argument("expansion voltage has zero magnitude");
  return std::conj(s) * v0 / mag2;
}

cplx exact_zip_current(cplx s, const ZipCoefficients& zip, cplx v) {
  const double mag = std::abs(v);
  if (mag == 0.0) return {0.0, 0.0};
  return std::conj(zip.z * s) * v + std::conj(zip.i * s) * v / mag + std::conj(zip.p * s) / std::conj(v);
}

LinearInjection linearize_zip_injection(const Load& load, const NominalVoltageProfile& expansion) {
  LinearInjection out;
  out.phases = load.phases;
  for (Phase p : load.phases.members()) {
    const cplx v0 = expansion.v[index_of(p)];
    const double mag = std::abs(v0);
    if (mag == 0.0) throw std::invalid_argument("load '" + load.id + "': expansion voltage has zero magnitude");
    const cplx s(load.p[index_of(p)], load.q[index_of(p)]);
    const cplx az = std::conj(load.zip.z * s);
    const cplx ai = std::conj(load.zip.i * s);
    const cplx ap = std::conj(load.zip.p * s);

    // d/dV_re and d/dV_im of each component at v0
    cplx d_re = az, d_im = kJ * az;
    const double m3 = mag * mag * mag;
    d_re += ai * (mag * mag - v0.real() * v0) / m3;
    d_im += ai * (kJ * mag * mag - v0.imag() * v0) / m3;
    const cplx cv2 = std::conj(v0) * std::conj(v0);
    d_re += -ap / cv2;
    d_im += kJ * ap / cv2;

    PhaseInjection& inj = out.phase[index_of(p)];
    inj.jacobian = real_jacobian(d_re, d_im);
    const cplx exact = exact_zip_current(s, load.zip, v0);
    inj.c0 = exact - (d_re * v0.real() + d_im * v0.imag());
    inj.per_p = setpoint_current({1.0, 0.0}, v0);
    inj.per_q = setpoint_current({0.0, 1.0}, v0);
  }
  return out;
}

std::vector<std::vector<BalanceTerm>> current_balance_terms(const FeederModel& model, const AdmittanceMatrix& m) {
  std::vector<std::vector<BalanceTerm>> terms(m.index.size());
  auto lookup = model.node_lookup();
  for (std::size_t bi = 0; bi < model.branches.size(); ++bi) {
    const Branch& br = model.branches[bi];
    const Matrix3c& y = m.series.at(bi);
    if (y.isZero(0.0)) continue;
    const std::size_t ends[2] = {lookup.at(br.from), lookup.at(br.to)};
    for (int e = 0; e < 2; ++e) {
      for (Phase p : br.phases.members()) {
        const int slot = m.index.find(ends[e], p);
        for (Phase q : br.phases.members()) {
          const cplx yv = y(index_of(p), index_of(q));
          if (yv == cplx(0.0, 0.0)) continue;
          terms[slot].push_back({bi, e == 0 ? 1 : -1, p, q, yv.real(), yv.imag()});
        }
      }
    }
  }
  return terms;
}

std::vector<cplx> evaluate_balance(const std::vector<std::vector<BalanceTerm>>& terms, const FeederModel& model,
                                   const PhaseNodeIndex& index, const std::vector<double>& branch_status,
                                   const std::vector<cplx>& voltage) {
  auto lookup = model.node_lookup();
  std::vector<cplx> out(terms.size(), cplx(0.0, 0.0));
  for (std::size_t slot = 0; slot < terms.size(); ++slot) {
    for (const auto& t : terms[slot]) {
      const Branch& br = model.branches[t.branch];
      const int f = index.find(lookup.at(br.from), t.v_phase);
      const int k = index.find(lookup.at(br.to), t.v_phase);
      const cplx dv = voltage[f] - voltage[k];
      out[slot] += static_cast<double>(t.sign) * branch_status[t.branch] * cplx(t.g, t.b) * dv;
    }
  }
  return out;
}

Eigen::Matrix<double, 6, 6> ohm_line_current(const Matrix3c& y) {
  Eigen::Matrix<double, 6, 6> m;
  const Eigen::Matrix3d g = y.real(), b = y.imag();
  m.topLeftCorner<3, 3>() = g;
  m.topRightCorner<3, 3>() = -b;
  m.bottomLeftCorner<3, 3>() = b;
  m.bottomRightCorner<3, 3>() = g;
  return m;
}

std::vector<HalfPlane> polygon_halfplanes(double i_max, int sides) {
  if (sides < 6) throw std::invalid_argument("polygon needs at least 6 sides");
  if (!(i_max > 0.0)) throw std::invalid_argument("ampacity must be positive");
  std::vector<HalfPlane> out;
  out.reserve(static_cast<std::size_t>(sides));
  for (int j = 0; j < sides; ++j) {
    const double a = 2.0 * std::numbers::pi * j / sides;
    out.push_back({std::cos(a), std::sin(a), i_max});
  }
  return out;
}

VoltageBox sector_box(Phase p, double v_min, double v_max, double angle_deg) {
  const double th = nominal_angle(p);
  const double t = std::tan(angle_deg * std::numbers::pi / 180.0);
  const double c = std::cos(th), s = std::sin(th);
  VoltageBox box{0.0, 0.0, 0.0, 0.0};
  for (double u : {v_min, v_max}) {
    for (double w : {-t * u, t * u}) {
      const double re = u * c - w * s, im = u * s + w * c;
      box.re_lo = std::min(box.re_lo, re);
      box.re_hi = std::max(box.re_hi, re);
      box.im_lo = std::min(box.im_lo, im);
      box.im_hi = std::max(box.im_hi, im);
    }
  }
  return box;
}

}  // namespace mgrestore
