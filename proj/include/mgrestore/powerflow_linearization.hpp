#pragma once

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "mgrestore/feeder_model.hpp"
#include "mgrestore/network_matrices.hpp"

namespace mgrestore {

using cplx = std::complex<double>;
using Matrix2d = Eigen::Matrix2d;

/// Expansion voltages per phase. Defaults to balanced 1 pu at nominal angles.
struct NominalVoltageProfile {
  std::array<cplx, 3> v{nominal_phasor(Phase::A), nominal_phasor(Phase::B), nominal_phasor(Phase::C)};
};

/// Affine map from nodal rectangular voltage to the current drawn by a device, per phase:
///   [I_re; I_im] = c0 + J [V_re; V_im]
/// Power coefficients give the zeroth-order current per unit of P and Q (I = (P - jQ) e^{j angle}).
struct PhaseInjection {
  cplx c0{0.0, 0.0};
  Matrix2d jacobian = Matrix2d::Zero();
  cplx per_p{0.0, 0.0};
  cplx per_q{0.0, 0.0};

  cplx evaluate(cplx v) const;
};

struct LinearInjection {
  PhaseSet phases;
  std::array<PhaseInjection, 3> phase{};
};

/// Current drawn by a ZIP load (consumption sign). Z part exact, I and P parts first-order about the
/// expansion point. Powers in pu, taken at 1 pu voltage.
LinearInjection linearize_zip_injection(const Load& load, const NominalVoltageProfile& expansion = {});

/// Exact ZIP current drawn at voltage v for per-phase power s.
cplx exact_zip_current(cplx s, const ZipCoefficients& zip, cplx v);

/// Zeroth-order current for a power setpoint at the expansion angle: conj(s) * v0 / |v0|^2.
cplx setpoint_current(cplx s, cplx v0);

/// One bilinear term of the current leaving a phase-node through a branch:
///   sign * x_branch * (y_pq * dV_q), dV = V_from - V_to
struct BalanceTerm {
  std::size_t branch = 0;
  int sign = 1;  // +1 at the from end, -1 at the to end
  Phase out_phase = Phase::A;
  Phase v_phase = Phase::A;
  double g = 0.0;
  double b = 0.0;
};

/// Terms per phase-node slot of `m.index`; only branches with a nonzero block contribute.
std::vector<std::vector<BalanceTerm>> current_balance_terms(const FeederModel& model, const AdmittanceMatrix& m);

/// Current leaving every phase-node for given statuses and voltages (slot order of the index).
std::vector<cplx> evaluate_balance(const std::vector<std::vector<BalanceTerm>>& terms, const FeederModel& model,
                                   const PhaseNodeIndex& index, const std::vector<double>& branch_status,
                                   const std::vector<cplx>& voltage);

/// Real form of a branch block: [I_re; I_im] = [[G, -B], [B, G]] [dV_re; dV_im], phases a, b, c.
Eigen::Matrix<double, 6, 6> ohm_line_current(const Matrix3c& y);

struct HalfPlane {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Circumscribed regular polygon around the disc of radius i_max.
std::vector<HalfPlane> polygon_halfplanes(double i_max, int sides);

/// Rectangular box of the voltage sector of one phase, with the origin included.
struct VoltageBox {
  double re_lo, re_hi, im_lo, im_hi;
};
VoltageBox sector_box(Phase p, double v_min, double v_max, double angle_deg);

}  // namespace mgrestore
