#pragma once

#include <random>
#include <string>

#include "support/fixtures.hpp"

namespace testing_support {

/// Connected graph on up to `max_nodes` nodes: a random spanning tree plus a few chords, each
/// branch switchable with probability one half. One black-start droop unit sits on node 0.
inline mgrestore::FeederModel random_graph(std::mt19937& rng, int max_nodes) {
  std::uniform_int_distribution<int> size(2, max_nodes);
  const int n = size(rng);
  mgrestore::FeederModel f = empty_feeder("random");
  for (int i = 0; i < n; ++i) f.nodes.push_back(node("v" + std::to_string(i)));
  std::bernoulli_distribution coin(0.5);
  int next = 0;
  auto add = [&](int a, int b) {
    f.branches.push_back(line("e" + std::to_string(next++), f.nodes[static_cast<std::size_t>(a)].id,
                              f.nodes[static_cast<std::size_t>(b)].id, coin(rng)));
  };
  for (int i = 1; i < n; ++i) add(std::uniform_int_distribution<int>(0, i - 1)(rng), i);
  const int chords = std::uniform_int_distribution<int>(0, n / 4)(rng);
  for (int k = 0; k < chords && n > 2; ++k) {
    const int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const int b = std::uniform_int_distribution<int>(0, n - 1)(rng);
    if (a != b) add(a, b);
  }
  f.ders.push_back(droop("g0", "v0", 100.0));
  return f;
}

struct ToyShape {
  int blocks = 0;
  int switchable_loads = 0;
};

/// Small restoration case: 3 to 5 bus blocks joined by switches in a random tree, one black-start
/// droop unit in the first block, an optional second unit, one constant-demand load per block.
/// One load is a DR load and at most one more is switchable.
inline mgrestore::FeederModel random_toy(std::mt19937& rng, int index) {
  using namespace mgrestore;
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  FeederModel f = empty_feeder("toy" + std::to_string(index));
  const int nb = pick(3, 5);
  std::vector<std::vector<std::string>> members(static_cast<std::size_t>(nb));
  int nodes = 0;
  for (int b = 0; b < nb; ++b) {
    const int k = pick(1, 2);
    for (int i = 0; i < k; ++i) {
      const std::string id = "n" + std::to_string(++nodes);
      f.nodes.push_back(node(id));
      if (i > 0) f.branches.push_back(line("L" + std::to_string(nodes), members[static_cast<std::size_t>(b)].back(), id, false, uni(0.3, 1.0)));
      members[static_cast<std::size_t>(b)].push_back(id);
    }
    if (b > 0) {
      const auto& up = members[static_cast<std::size_t>(pick(0, b - 1))];
      f.branches.push_back(line("S" + std::to_string(b), up[static_cast<std::size_t>(pick(0, static_cast<int>(up.size()) - 1))],
                                members[static_cast<std::size_t>(b)].front(), true, uni(0.3, 1.0)));
    }
  }
  auto at = [&](int b) {
    const auto& m = members[static_cast<std::size_t>(b)];
    return m[static_cast<std::size_t>(pick(0, static_cast<int>(m.size()) - 1))];
  };
  double demand = 0.0;
  const int dr = pick(0, nb - 1);
  const int sw = pick(-1, nb - 1);
  for (int b = 0; b < nb; ++b) {
    Load l = load("D" + std::to_string(b), at(b), uni(10, 60), uni(2, 20));
    for (auto& p : l.p) p *= uni(0.8, 1.2);
    const double z = uni(0, 1), i = uni(0, 1 - z);
    l.zip = {z, i, 1 - z - i};
    l.switchable = b == sw && b != dr;
    l.controllable_dr = b == dr;
    if (l.controllable_dr) {
      l.dr_min_fraction = uni(0.2, 0.7);
      l.dr_max_fraction = 1.0;
    }
    for (double p : l.p) demand += p;
    f.loads.push_back(l);
  }
  Der g1 = droop("G1", at(0), uni(0.4, 0.9) * demand);
  g1.q_min = -0.5 * demand;
  g1.q_max = 0.5 * demand;
  f.ders.push_back(g1);
  switch (pick(0, 3)) {
    case 1: {
      Der g2 = droop("G2", at(pick(1, nb - 1)), uni(0.3, 0.6) * demand);
      g2.q_min = -0.5 * demand;
      g2.q_max = 0.5 * demand;
      f.ders.push_back(g2);
      break;
    }
    case 2: {
      Der g2 = droop("G2", at(pick(1, nb - 1)), uni(0.2, 0.4) * demand, false);
      g2.kind = DerKind::PqDispatchable;
      g2.q_min = -0.2 * demand;
      g2.q_max = 0.2 * demand;
      f.ders.push_back(g2);
      break;
    }
    case 3: {
      Der g2 = droop("PV", at(pick(0, nb - 1)), 0.0, false);
      g2.kind = DerKind::PqNondispatchable;
      const double pp = uni(0.02, 0.08) * demand;
      g2.p_max = 3 * pp;
      g2.q_min = g2.q_max = 0.0;
      g2.forecast_p = {{pp, pp, pp}};
      g2.forecast_q = {{0.0, 0.0, 0.0}};
      f.ders.push_back(g2);
      break;
    }
    default:
      break;
  }
  return f;
}

}  // namespace testing_support
