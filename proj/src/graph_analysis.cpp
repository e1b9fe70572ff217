#include "mgrestore/graph_analysis.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <queue>
#include <set>

#include <json.hpp>

namespace mgrestore {

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

bool is_black_start(const Der& d) { return d.black_start && !d.damaged && d.kind == DerKind::Droop; }

/// Component label per node; labels are dense and ordered by first node.
std::vector<int> label_components(const FeederModel& model, bool (*keep)(const Branch&)) {
  auto lookup = model.node_lookup();
  DisjointSets sets(model.nodes.size());
  for (const auto& b : model.branches) {
    if (!keep(b)) continue;
    auto f = lookup.find(b.from), t = lookup.find(b.to);
    if (f == lookup.end() || t == lookup.end()) throw GraphError("branch '" + b.id + "' has a dangling endpoint");
    sets.unite(f->second, t->second);
  }
  std::vector<int> label(model.nodes.size(), -1);
  std::unordered_map<std::size_t, int> root_label;
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    auto [it, fresh] = root_label.emplace(sets.find(i), static_cast<int>(root_label.size()));
    label[i] = it->second;
  }
  return label;
}

std::vector<int> bfs_distances(const std::vector<std::vector<int>>& adj, int source) {
  std::vector<int> dist(adj.size(), -1);
  std::queue<int> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  return dist;
}

}  // namespace

std::vector<std::vector<int>> BusBlockGraph::adjacency() const {
  std::vector<std::set<int>> sets(blocks.size());
  for (const auto& e : edges) {
    sets[e.a].insert(e.b);
    sets[e.b].insert(e.a);
  }
  std::vector<std::vector<int>> adj;
  adj.reserve(sets.size());
  for (const auto& s : sets) adj.emplace_back(s.begin(), s.end());
  return adj;
}

std::vector<FeederModel> connected_subgraphs(const FeederModel& model) {
  auto label = label_components(model, [](const Branch& b) { return !b.damaged; });
  int count = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
  std::vector<FeederModel> parts(count);
  for (auto& p : parts) {
    p.name = model.name;
    p.notes = model.notes;
    p.base_frequency = model.base_frequency;
    p.step_interval = model.step_interval;
    p.base = model.base;
    p.units = model.units;
  }
  auto lookup = model.node_lookup();
  for (std::size_t i = 0; i < model.nodes.size(); ++i) parts[label[i]].nodes.push_back(model.nodes[i]);
  for (const auto& b : model.branches)
    if (!b.damaged) parts[label[lookup.at(b.from)]].branches.push_back(b);
  for (const auto& d : model.ders) parts[label[lookup.at(d.node)]].ders.push_back(d);
  for (const auto& l : model.loads) parts[label[lookup.at(l.node)]].loads.push_back(l);
  if (count > 1)
    for (int c = 0; c < count; ++c) parts[c].name = model.name + "#" + std::to_string(c);
  return parts;
}

BusBlockGraph reduce_to_bus_blocks(const FeederModel& model) {
  auto label = label_components(model, [](const Branch& b) { return !b.damaged && !b.switchable; });
  BusBlockGraph g;
  int count = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
  g.blocks.resize(count);
  for (int c = 0; c < count; ++c) g.blocks[c].id = c;
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    g.blocks[label[i]].nodes.push_back(model.nodes[i].id);
    g.block_of[model.nodes[i].id] = label[i];
  }
  for (const auto& d : model.ders)
    if (is_black_start(d)) g.blocks[g.block_of.at(d.node)].hosts_black_start = true;
  for (const auto& b : model.branches) {
    if (b.damaged || !b.switchable) continue;
    int a = g.block_of.at(b.from), c = g.block_of.at(b.to);
    if (a != c) g.edges.push_back({a, c, b.id});
  }
  return g;
}

int eccentricity(const BusBlockGraph& graph, int vertex) {
  if (vertex < 0 || vertex >= static_cast<int>(graph.blocks.size()))
    throw GraphError("block " + std::to_string(vertex) + " does not exist");
  auto dist = bfs_distances(graph.adjacency(), vertex);
  int ecc = 0;
  for (int d : dist) {
    if (d < 0) throw GraphError("block graph is disconnected; split it with connected_subgraphs first");
    ecc = std::max(ecc, d);
  }
  return ecc;
}

StepBounds restoration_step_bounds(const BusBlockGraph& graph) {
  std::optional<StepBounds> out;
  for (const auto& b : graph.blocks) {
    if (!b.hosts_black_start) continue;
    int e = eccentricity(graph, b.id);
    if (!out)
      out = StepBounds{e, e};
    else
      out = StepBounds{std::min(out->rsr, e), std::max(out->rsd, e)};
  }
  if (!out) throw GraphError("no bus block hosts a black-start droop DG");
  return *out;
}

StepEstimate step_estimates(StepBounds bounds, int n_black_start) {
  if (n_black_start < 1) throw GraphError("at least one black-start DG is required");
  if (bounds.rsr > bounds.rsd) throw GraphError("radius exceeds diameter");
  return {bounds.rsr, bounds.rsd, n_black_start, bounds.rsr + n_black_start, bounds.rsd + n_black_start};
}

int count_black_start(const FeederModel& model) {
  return static_cast<int>(std::count_if(model.ders.begin(), model.ders.end(), is_black_start));
}

GraphReport analyze(const FeederModel& model) {
  GraphReport r;
  r.graph = reduce_to_bus_blocks(model);
  for (const auto& b : r.graph.blocks) r.eccentricities.push_back(eccentricity(r.graph, b.id));
  r.estimate = step_estimates(restoration_step_bounds(r.graph), count_black_start(model));
  return r;
}

std::string report_json(const FeederModel& model, const GraphReport& report) {
  using nlohmann::json;
  json blocks = json::array();
  for (const auto& b : report.graph.blocks)
    blocks.push_back({{"id", b.id},
                      {"nodes", b.nodes},
                      {"hosts_black_start", b.hosts_black_start},
                      {"eccentricity", report.eccentricities.at(b.id)}});
  json edges = json::array();
  for (const auto& e : report.graph.edges) edges.push_back({{"from_block", e.a}, {"to_block", e.b}, {"branch", e.branch}});
  const auto& s = report.estimate;
  json doc{{"feeder", model.name},
           {"n_nodes", model.nodes.size()},
           {"n_blocks", report.graph.blocks.size()},
           {"blocks", blocks},
           {"edges", edges},
           {"rsr", s.rsr},
           {"rsd", s.rsd},
           {"n_black_start", s.n_black_start},
           {"conservative_steps", s.conservative},
           {"generous_steps", s.generous}};
  return doc.dump(2) + "\n";
}

}  // namespace mgrestore
