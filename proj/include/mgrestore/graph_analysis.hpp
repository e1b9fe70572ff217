#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mgrestore/feeder_model.hpp"

namespace mgrestore {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BusBlock {
  int id = 0;
  std::vector<std::string> nodes;
  bool hosts_black_start = false;
};

/// Inter-block edge: one switchable, intact branch whose ends lie in different blocks.
struct BlockEdge {
  int a = 0;
  int b = 0;
  std::string branch;
};

struct BusBlockGraph {
  std::vector<BusBlock> blocks;
  std::vector<BlockEdge> edges;
  std::unordered_map<std::string, int> block_of;  // node id -> block id

  /// Neighbor lists (block ids), parallel edges collapsed.
  std::vector<std::vector<int>> adjacency() const;
};

struct StepBounds {
  int rsr = 0;
  int rsd = 0;
};

struct StepEstimate {
  int rsr = 0;
  int rsd = 0;
  int n_black_start = 0;
  int conservative = 0;
  int generous = 0;
};

/// Drops damaged branches and splits the rest into maximal connected pieces.
/// DERs and loads follow their host node. Order follows first node appearance.
std::vector<FeederModel> connected_subgraphs(const FeederModel& model);

/// Contracts nodes joined by intact non-switchable branches.
BusBlockGraph reduce_to_bus_blocks(const FeederModel& model);

/// BFS hop count to the farthest block. Throws on a missing vertex or a disconnected graph.
int eccentricity(const BusBlockGraph& graph, int vertex);

/// Min and max eccentricity over blocks hosting a black-start unit.
StepBounds restoration_step_bounds(const BusBlockGraph& graph);

StepEstimate step_estimates(StepBounds bounds, int n_black_start);

/// Black-start droop units that are not damaged.
int count_black_start(const FeederModel& model);

struct GraphReport {
  BusBlockGraph graph;
  std::vector<int> eccentricities;  // per block
  StepEstimate estimate;
};

GraphReport analyze(const FeederModel& model);

/// Machine-readable rendering of a report (JSON text).
std::string report_json(const FeederModel& model, const GraphReport& report);

}  // namespace mgrestore
