#pragma once

#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mgrestore/feeder_model.hpp"

namespace mgrestore {

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered (node, phase) pairs; absent phases get no slot.
class PhaseNodeIndex {
 public:
  PhaseNodeIndex() = default;
  explicit PhaseNodeIndex(const FeederModel& model);

  std::size_t size() const { return entries_.size(); }
  const std::pair<std::size_t, Phase>& at(std::size_t i) const { return entries_.at(i); }
  /// -1 when the node does not carry the phase.
  int find(std::size_t node, Phase p) const;

 private:
  std::vector<std::pair<std::size_t, Phase>> entries_;
  std::vector<std::array<int, 3>> slot_;
};

/// Series admittance: inverse of the present-phase impedance submatrix, zero-padded.
Matrix3c branch_admittance(const Branch& branch);

struct AdmittanceMatrix {
  PhaseNodeIndex index;
  std::vector<Matrix3c> series;  // per branch, zero when the branch is excluded
  std::vector<Matrix3c> shunt;   // per branch, stored only
  Eigen::MatrixXcd y;            // phase-node admittance, shunts excluded unless requested
};

/// Stamps every branch whose status is set. `branch_status` has one flag per model branch.
AdmittanceMatrix assemble_bus_admittance(const FeederModel& model, const std::vector<bool>& branch_status,
                                         bool include_shunts = false);

/// Coordinate text: "row col re im" per nonzero, with a header naming each index slot.
std::string coordinate_dump(const FeederModel& model, const AdmittanceMatrix& m);

}  // namespace mgrestore
