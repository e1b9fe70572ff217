#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mgrestore/powerflow_linearization.hpp"
#include "support/fixtures.hpp"

using namespace mgrestore;
namespace ts = testing_support;

namespace {

// consumption current of a ZIP load from its power law S(V) = s (z|V|^2 + i|V| + p)
cplx oracle_current(cplx s, const ZipCoefficients& zip, cplx v) {
  const double m = std::abs(v);
  const cplx sv = s * (zip.z * m * m + zip.i * m + zip.p);
  return std::conj(sv / v);
}

Load zip_load(double z, double i, double p) {
  Load l = ts::load("l", "n", 0.3, 0.1);
  l.p = {0.3, 0.25, 0.2};
  l.q = {0.1, 0.05, -0.02};
  l.zip = {z, i, p};
  return l;
}

}  // namespace

TEST_CASE("exact ZIP current agrees with the power law") {
  const ZipCoefficients zip{0.2, 0.3, 0.5};
  for (double mag : {0.9, 1.0, 1.07})
    for (double ang : {-2.0, 0.1, 2.2}) {
      const cplx v = std::polar(mag, ang), s(0.4, -0.15);
      CHECK(std::abs(exact_zip_current(s, zip, v) - oracle_current(s, zip, v)) < 1e-14);
    }
  CHECK(exact_zip_current({1, 1}, zip, {0, 0}) == cplx(0, 0));
}

TEST_CASE("constant impedance is exactly linear") {
  const Load l = zip_load(1, 0, 0);
  LinearInjection li = linearize_zip_injection(l);
  for (Phase p : kAllPhases) {
    const auto& inj = li.phase[index_of(p)];
    const cplx s(l.p[index_of(p)], l.q[index_of(p)]);
    CHECK(std::abs(inj.c0) < 1e-15);
    CHECK(std::abs(inj.evaluate({0, 0})) == 0.0);
    for (double mag : {0.5, 0.95, 1.1})
      for (double ang : {-1.3, 0.0, 2.9}) {
        const cplx v = std::polar(mag, ang);
        CHECK(std::abs(inj.evaluate(v) - oracle_current(s, {1, 0, 0}, v)) < 1e-12);
      }
  }
}

TEST_CASE("linearization is exact at the expansion point and matches finite differences") {
  const Load l = zip_load(0.2, 0.3, 0.5);
  LinearInjection li = linearize_zip_injection(l);
  for (Phase p : kAllPhases) {
    const auto& inj = li.phase[index_of(p)];
    const cplx v0 = nominal_phasor(p);
    const cplx s(l.p[index_of(p)], l.q[index_of(p)]);
    CHECK(std::abs(inj.evaluate(v0) - oracle_current(s, l.zip, v0)) < 1e-13);
    const double h = 1e-6;
    const cplx dre = (oracle_current(s, l.zip, v0 + h) - oracle_current(s, l.zip, v0 - h)) / (2 * h);
    const cplx dim = (oracle_current(s, l.zip, v0 + cplx(0, h)) - oracle_current(s, l.zip, v0 - cplx(0, h))) / (2 * h);
    CHECK(inj.jacobian(0, 0) == doctest::Approx(dre.real()).epsilon(1e-7));
    CHECK(inj.jacobian(1, 0) == doctest::Approx(dre.imag()).epsilon(1e-7));
    CHECK(inj.jacobian(0, 1) == doctest::Approx(dim.real()).epsilon(1e-7));
    CHECK(inj.jacobian(1, 1) == doctest::Approx(dim.imag()).epsilon(1e-7));
  }
}

TEST_CASE("constant-power error is second order") {
  const Load l = zip_load(0, 0, 1);
  LinearInjection li = linearize_zip_injection(l);
  const cplx v0 = nominal_phasor(Phase::B);
  const cplx s(l.p[1], l.q[1]);
  double worst_ratio = 0.0;
  for (int i = -5; i <= 5; ++i)
    for (int j = -5; j <= 5; ++j) {
      const cplx dv(0.01 * i, 0.01 * j);
      if (std::abs(dv) == 0.0 || std::abs(dv) > 0.05) continue;
      const double err = std::abs(li.phase[1].evaluate(v0 + dv) - oracle_current(s, l.zip, v0 + dv));
      worst_ratio = std::max(worst_ratio, err / std::norm(dv));
    }
  // |S| / |V|^3 with |V| >= 0.95 bounds the second derivative of conj(S)/conj(V)
  CHECK(worst_ratio <= std::abs(s) / std::pow(0.95, 3));
  CHECK(worst_ratio > 0.0);
}

TEST_CASE("setpoint current is zeroth order") {
  const cplx v0 = nominal_phasor(Phase::C);
  const cplx s(0.5, 0.2);
  CHECK(std::abs(setpoint_current(s, v0) - std::conj(s / v0)) < 1e-15);
  CHECK_THROWS(setpoint_current(s, {0, 0}));
}

TEST_CASE("balance terms reproduce the admittance product") {
  FeederModel f = ts::empty_feeder("three");
  f.nodes = {ts::node("p"), ts::node("q"), ts::node("r")};
  f.branches = {ts::line("pq", "p", "q"), ts::line("qr", "q", "r", true)};
  f = to_per_unit(f);
  AdmittanceMatrix m = assemble_bus_admittance(f, {true, true});
  auto terms = current_balance_terms(f, m);
  std::vector<cplx> v(m.index.size());
  Eigen::VectorXcd ve(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    v[k] = std::polar(1.0 - 0.01 * static_cast<double>(k), 0.1 * static_cast<double>(k));
    ve(static_cast<Eigen::Index>(k)) = v[k];
  }
  auto out = evaluate_balance(terms, f, m.index, {1.0, 1.0}, v);
  Eigen::VectorXcd want = m.y * ve;
  for (std::size_t k = 0; k < v.size(); ++k) CHECK(std::abs(out[k] - want(static_cast<Eigen::Index>(k))) < 1e-9);
  auto open = evaluate_balance(terms, f, m.index, {1.0, 0.0}, v);
  CHECK(std::abs(open[static_cast<std::size_t>(m.index.find(2, Phase::A))]) == 0.0);
}

TEST_CASE("line current block is the real form of y") {
  Matrix3c y = branch_admittance(ts::line("x", "p", "q"));
  auto b = ohm_line_current(y);
  Eigen::Vector3cd dv(cplx(0.01, 0.002), cplx(-0.003, 0.004), cplx(0.001, -0.002));
  Eigen::Vector3cd i = y * dv;
  Eigen::Matrix<double, 6, 1> x;
  x << dv.real(), dv.imag();
  Eigen::Matrix<double, 6, 1> r = b * x;
  for (int k = 0; k < 3; ++k) {
    CHECK(r(k) == doctest::Approx(i(k).real()));
    CHECK(r(k + 3) == doctest::Approx(i(k).imag()));
  }
}

TEST_CASE("polygon circumscribes the ampacity circle") {
  auto planes = polygon_halfplanes(2.0, 12);
  REQUIRE(planes.size() == 12);
  for (int k = 0; k < 360; ++k) {
    const double a = k * std::numbers::pi / 180.0;
    for (const auto& h : planes) CHECK(h.alpha * 2.0 * std::cos(a) + h.beta * 2.0 * std::sin(a) <= h.gamma + 1e-12);
  }
  CHECK_THROWS(polygon_halfplanes(1.0, 5));
  CHECK_THROWS(polygon_halfplanes(0.0, 12));
}

TEST_CASE("sector box covers the sector and the origin") {
  for (Phase p : kAllPhases) {
    VoltageBox b = sector_box(p, 0.95, 1.05, 15);
    CHECK(b.re_lo <= 0.0);
    CHECK(b.re_hi >= 0.0);
    CHECK(b.im_lo <= 0.0);
    CHECK(b.im_hi >= 0.0);
    const double th = nominal_angle(p);
    for (double mag : {0.95, 1.05})
      for (double d : {-15.0, 0.0, 15.0}) {
        // corners of the sector: projection in [v_min, v_max], perpendicular within tan(15 deg)
        const double t = std::tan(d * std::numbers::pi / 180.0);
        const cplx v = std::polar(1.0, th) * cplx(mag, mag * t);
        CHECK(v.real() >= b.re_lo - 1e-12);
        CHECK(v.real() <= b.re_hi + 1e-12);
        CHECK(v.imag() >= b.im_lo - 1e-12);
        CHECK(v.imag() <= b.im_hi + 1e-12);
      }
  }
}
