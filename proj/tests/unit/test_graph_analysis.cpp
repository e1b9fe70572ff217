#include <doctest.h>

#include <algorithm>

#include "mgrestore/graph_analysis.hpp"
#include "support/fixtures.hpp"

using namespace mgrestore;
namespace ts = testing_support;

namespace {

// n1 -L- n2 =S= n3 -L- n4 =S= n5, plus n3 =S= n6; droop unit at n1
FeederModel branching() {
  FeederModel f = ts::empty_feeder("branching");
  for (const char* n : {"n1", "n2", "n3", "n4", "n5", "n6"}) f.nodes.push_back(ts::node(n));
  f.branches = {ts::line("a", "n1", "n2"), ts::line("s1", "n2", "n3", true), ts::line("b", "n3", "n4"),
                ts::line("s2", "n4", "n5", true), ts::line("s3", "n3", "n6", true)};
  f.ders = {ts::droop("g", "n1", 100)};
  return f;
}

}  // namespace

TEST_CASE("non-switchable branches merge nodes into blocks") {
  BusBlockGraph g = reduce_to_bus_blocks(branching());
  REQUIRE(g.blocks.size() == 4);
  CHECK(g.block_of.at("n1") == g.block_of.at("n2"));
  CHECK(g.block_of.at("n3") == g.block_of.at("n4"));
  CHECK(g.block_of.at("n5") != g.block_of.at("n4"));
  CHECK(g.edges.size() == 3);
  CHECK(g.blocks[static_cast<std::size_t>(g.block_of.at("n1"))].hosts_black_start);
}

TEST_CASE("eccentricity and step bounds") {
  BusBlockGraph g = reduce_to_bus_blocks(branching());
  const int root = g.block_of.at("n1");
  CHECK(eccentricity(g, root) == 2);
  CHECK(eccentricity(g, g.block_of.at("n5")) == 2);
  CHECK(eccentricity(g, g.block_of.at("n3")) == 1);
  StepBounds b = restoration_step_bounds(g);
  CHECK(b.rsr == 2);
  CHECK(b.rsd == 2);
  StepEstimate e = step_estimates(b, 1);
  CHECK(e.conservative == 3);
  CHECK(e.generous == 3);
  CHECK_THROWS_AS(eccentricity(g, 99), GraphError);
}

TEST_CASE("step estimates add the number of black-start units") {
  StepEstimate e = step_estimates({4, 5}, 2);
  CHECK(e.conservative == 6);
  CHECK(e.generous == 7);
  CHECK_THROWS_AS(step_estimates({4, 5}, 0), GraphError);
  CHECK_THROWS_AS(step_estimates({5, 4}, 1), GraphError);
}

TEST_CASE("damaged branches split the feeder") {
  FeederModel f = branching();
  f.branches[1].damaged = true;
  auto parts = connected_subgraphs(f);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].ders.size() == 1);
  CHECK(parts[1].ders.empty());
  CHECK(parts[0].name != parts[1].name);
  CHECK_THROWS_AS(analyze(f), GraphError);
}

TEST_CASE("a feeder without black-start units has no step bounds") {
  FeederModel f = branching();
  f.ders[0].black_start = false;
  CHECK(count_black_start(f) == 0);
  CHECK_THROWS_AS(restoration_step_bounds(reduce_to_bus_blocks(f)), GraphError);
}

TEST_CASE("modified 123-node fixture gives six and seven steps") {
  FeederModel f = load_feeder_file(ts::fixture("ieee123_base.json"));
  GraphReport r = analyze(f);
  CHECK(r.graph.blocks.size() == 11);
  CHECK(r.estimate.rsr == 4);
  CHECK(r.estimate.rsd == 5);
  CHECK(r.estimate.n_black_start == 2);
  CHECK(r.estimate.conservative == 6);
  CHECK(r.estimate.generous == 7);
  const std::string js = report_json(f, r);
  CHECK(js.find("\"generous_steps\": 7") != std::string::npos);
}
