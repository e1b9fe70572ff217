#include "mgrestore/network_matrices.hpp"

#include <cstdio>
#include <sstream>

namespace mgrestore {

PhaseNodeIndex::PhaseNodeIndex(const FeederModel& model) {
  slot_.assign(model.nodes.size(), {-1, -1, -1});
  for (std::size_t n = 0; n < model.nodes.size(); ++n) {
    for (Phase p : model.nodes[n].phases.members()) {
      slot_[n][index_of(p)] = static_cast<int>(entries_.size());
      entries_.emplace_back(n, p);
    }
  }
}

int PhaseNodeIndex::find(std::size_t node, Phase p) const {
  if (node >= slot_.size()) return -1;
  return slot_[node][index_of(p)];
}

Matrix3c branch_admittance(const Branch& branch) {
  auto members = branch.phases.members();
  const auto n = static_cast<Eigen::Index>(members.size());
  Eigen::MatrixXcd z(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) z(i, k) = branch.impedance(index_of(members[i]), index_of(members[k]));
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(z);
  lu.setThreshold(1e-12);
  if (n == 0 || !lu.isInvertible()) throw NetworkError("branch '" + branch.id + "' has a singular impedance");
  Eigen::MatrixXcd y = lu.inverse();
  Matrix3c out = Matrix3c::Zero();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) out(index_of(members[i]), index_of(members[k])) = y(i, k);
  return out;
}

AdmittanceMatrix assemble_bus_admittance(const FeederModel& model, const std::vector<bool>& branch_status,
                                         bool include_shunts) {
  if (branch_status.size() != model.branches.size())
    throw NetworkError("branch status vector has " + std::to_string(branch_status.size()) + " entries, expected " +
                       std::to_string(model.branches.size()));
  AdmittanceMatrix m;
  m.index = PhaseNodeIndex(model);
  const auto dim = static_cast<Eigen::Index>(m.index.size());
  m.y = Eigen::MatrixXcd::Zero(dim, dim);
  auto lookup = model.node_lookup();
  for (std::size_t bi = 0; bi < model.branches.size(); ++bi) {
    const Branch& b = model.branches[bi];
    m.shunt.push_back(b.shunt_admittance);
    if (!branch_status[bi]) {
      m.series.push_back(Matrix3c::Zero());
      continue;
    }
    Matrix3c y = branch_admittance(b);
    m.series.push_back(y);
    const std::size_t f = lookup.at(b.from), t = lookup.at(b.to);
    for (Phase p : b.phases.members()) {
      for (Phase q : b.phases.members()) {
        const auto yv = y(index_of(p), index_of(q));
        const int fp = m.index.find(f, p), fq = m.index.find(f, q);
        const int tp = m.index.find(t, p), tq = m.index.find(t, q);
        m.y(fp, fq) += yv;
        m.y(tp, tq) += yv;
        m.y(fp, tq) -= yv;
        m.y(tp, fq) -= yv;
        if (include_shunts) {
          const auto ys = 0.5 * b.shunt_admittance(index_of(p), index_of(q));
          m.y(fp, fq) += ys;
          m.y(tp, tq) += ys;
        }
      }
    }
  }
  return m;
}

std::string coordinate_dump(const FeederModel& model, const AdmittanceMatrix& m) {
  std::ostringstream os;
  os << "# slot node phase\n";
  for (std::size_t i = 0; i < m.index.size(); ++i) {
    const auto& [n, p] = m.index.at(i);
    os << "# " << i << ' ' << model.nodes[n].id << ' ' << phase_letter(p) << '\n';
  }
  os << "# row col re im\n";
  char buf[96];
  for (Eigen::Index r = 0; r < m.y.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.y.cols(); ++c) {
      const auto v = m.y(r, c);
      if (v == std::complex<double>(0.0, 0.0)) continue;
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g %.17g\n", static_cast<long>(r), static_cast<long>(c), v.real(),
                    v.imag());
      os << buf;
    }
  }
  return os.str();
}

}  // namespace mgrestore
