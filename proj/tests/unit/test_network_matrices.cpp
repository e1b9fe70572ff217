#include <doctest.h>

#include "mgrestore/network_matrices.hpp"
#include "support/fixtures.hpp"

using namespace mgrestore;
namespace ts = testing_support;

TEST_CASE("series admittance inverts the present phases only") {
  Branch b = ts::line("x", "p", "q");
  b.phases = *PhaseSet::parse("ac");
  Matrix3c y = branch_admittance(b);
  CHECK(y(1, 1) == std::complex<double>(0, 0));
  CHECK(y(0, 1) == std::complex<double>(0, 0));
  Eigen::Matrix2cd z;
  z << b.impedance(0, 0), b.impedance(0, 2), b.impedance(2, 0), b.impedance(2, 2);
  Eigen::Matrix2cd yz;
  yz << y(0, 0), y(0, 2), y(2, 0), y(2, 2);
  CHECK((yz * z - Eigen::Matrix2cd::Identity()).norm() < 1e-12);
}

TEST_CASE("singular impedance is rejected") {
  Branch b = ts::line("x", "p", "q");
  b.impedance.setZero();
  CHECK_THROWS_AS(branch_admittance(b), NetworkError);
}

TEST_CASE("bus admittance stamps closed branches") {
  FeederModel f = ts::empty_feeder("three");
  f.nodes = {ts::node("p"), ts::node("q"), ts::node("r")};
  f.nodes[2].phases = *PhaseSet::parse("b");
  Branch br = ts::line("qr", "q", "r");
  br.phases = *PhaseSet::parse("b");
  f.branches = {ts::line("pq", "p", "q"), br};
  f = to_per_unit(f);

  AdmittanceMatrix all = assemble_bus_admittance(f, {true, true});
  REQUIRE(all.index.size() == 7);
  CHECK(all.index.find(2, Phase::A) == -1);
  CHECK(all.y.isApprox(all.y.transpose()));
  // series-only stamps leave every row summing to zero
  CHECK(all.y.rowwise().sum().norm() < 1e-9);

  AdmittanceMatrix open = assemble_bus_admittance(f, {true, false});
  const int r = open.index.find(2, Phase::B);
  CHECK(open.y.row(r).norm() == 0.0);
  CHECK(open.series[1].isZero());
  const int pa = open.index.find(0, Phase::A), qa = open.index.find(1, Phase::A);
  CHECK(std::abs(open.y(pa, qa) + branch_admittance(f.branches[0])(0, 0)) < 1e-12);
  CHECK_THROWS(assemble_bus_admittance(f, {true}));
}

TEST_CASE("shunt stamps are optional") {
  FeederModel f = ts::empty_feeder("two");
  f.nodes = {ts::node("p"), ts::node("q")};
  f.branches = {ts::line("pq", "p", "q")};
  f.branches[0].shunt_admittance = Matrix3c::Identity() * std::complex<double>(0, 1e-4);
  AdmittanceMatrix without = assemble_bus_admittance(f, {true});
  AdmittanceMatrix with = assemble_bus_admittance(f, {true}, true);
  CHECK((with.y - without.y).diagonal().imag().minCoeff() == doctest::Approx(0.5e-4));
}

TEST_CASE("coordinate dump lists slots and nonzeros") {
  FeederModel f = ts::empty_feeder("two");
  f.nodes = {ts::node("p"), ts::node("q")};
  f.branches = {ts::line("pq", "p", "q")};
  const std::string dump = coordinate_dump(f, assemble_bus_admittance(f, {true}));
  CHECK(dump.find("# 0 p a") != std::string::npos);
  CHECK(std::count(dump.begin(), dump.end(), '\n') >= 36 + 6);
}
