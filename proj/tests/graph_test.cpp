#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "asyspa/graph.hpp"

namespace {

using asyspa::Digraph;

TEST(Digraph, RingHasUnitOutDegreeAndFanoutTwo) {
  Digraph g = asyspa::make_ring(5);
  EXPECT_EQ(g.size(), 5);
  EXPECT_EQ(g.edge_count(), 5);
  for (int i = 0; i < 5; ++i) {
    ASSERT_EQ(g.out(i).size(), 1u);
    EXPECT_EQ(g.out(i)[0], (i + 1) % 5);
    EXPECT_EQ(g.fanout(i), 2);
  }
  EXPECT_TRUE(asyspa::strongly_connected(g));
}

TEST(Digraph, RingPlusChordsAddsForwardNeighbours) {
  Digraph g = asyspa::make_ring_plus_k(6, 2);
  EXPECT_EQ(g.edge_count(), 12);
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(g.fanout(i), 3);
    std::set<int> want{(i + 1) % 6, (i + 2) % 6};
    std::set<int> got(g.out(i).begin(), g.out(i).end());
    EXPECT_EQ(got, want);
  }
  EXPECT_TRUE(asyspa::strongly_connected(g));
}

TEST(Digraph, ExponentialOffsetsForEightNodes) {
  // Offsets 2^j + 1 reduced mod 8 with self-offsets dropped: {2, 3, 5}.
  Digraph g = asyspa::make_exponential(8);
  std::set<int> want{2, 3, 5};
  for (int i = 0; i < 8; ++i) {
    std::set<int> got;
    for (int j : g.out(i)) got.insert((j - i + 8) % 8);
    EXPECT_EQ(got, want) << "node " << i;
  }
  EXPECT_TRUE(asyspa::strongly_connected(g));
}

TEST(Digraph, CompleteTwoNodeDigraph) {
  Digraph g(2, {{0, 1}, {1, 0}});
  EXPECT_EQ(g.fanout(0), 2);
  EXPECT_EQ(g.fanout(1), 2);
  EXPECT_TRUE(asyspa::strongly_connected(g));
}

TEST(Digraph, DetectsMissingBackPath) {
  Digraph g(3, {{0, 1}, {1, 2}});  // no path back to 0
  EXPECT_FALSE(asyspa::strongly_connected(g));
}

TEST(Digraph, SingleNodeCountsAsStronglyConnected) {
  Digraph g = asyspa::make_single_node();
  EXPECT_EQ(g.size(), 1);
  EXPECT_EQ(g.fanout(0), 1);
  EXPECT_TRUE(asyspa::strongly_connected(g));
}

TEST(Digraph, RejectsSelfLoopsAndBadEndpoints) {
  EXPECT_THROW(Digraph(2, {{0, 0}}), std::invalid_argument);
  EXPECT_THROW(Digraph(2, {{0, 2}}), std::invalid_argument);
  EXPECT_THROW(Digraph(0, {}), std::invalid_argument);
}

TEST(Digraph, DuplicateEdgesAreIgnored) {
  Digraph g(3, {{0, 1}, {0, 1}, {1, 2}, {2, 0}});
  EXPECT_EQ(g.edge_count(), 3);
  EXPECT_EQ(g.fanout(0), 2);
}

TEST(Topology, BuilderDispatchesByName) {
  EXPECT_EQ(asyspa::build_topology("ring", 4).edge_count(), 4);
  EXPECT_EQ(asyspa::build_topology("ring_plus_k", 5, 2).edge_count(), 10);
  EXPECT_EQ(asyspa::build_topology("single", 1).size(), 1);
  EXPECT_THROW(asyspa::build_topology("mesh", 4), std::invalid_argument);
}

TEST(EdgeListFormat, RoundTripsThroughOneBasedText) {
  Digraph g = asyspa::make_ring_plus_k(5, 2);
  std::stringstream ss;
  asyspa::write_edge_list(ss, g);
  Digraph h = asyspa::read_edge_list(ss);
  ASSERT_EQ(h.size(), g.size());
  for (int i = 0; i < g.size(); ++i) EXPECT_EQ(h.out(i), g.out(i));
}

TEST(EdgeListFormat, UsesOneBasedIdsOnDisk) {
  std::stringstream ss("n=2\n1 2\n2 1\n");
  Digraph g = asyspa::read_edge_list(ss);
  EXPECT_EQ(g.out(0), std::vector<int>{1});
  EXPECT_EQ(g.out(1), std::vector<int>{0});
}

TEST(EdgeListFormat, RejectsMalformedInput) {
  {
    std::stringstream ss("nodes=2\n1 2\n");
    EXPECT_THROW(asyspa::read_edge_list(ss), asyspa::config_error);
  }
  {
    std::stringstream ss("n=2\n1 2 3\n");
    EXPECT_THROW(asyspa::read_edge_list(ss), asyspa::config_error);
  }
  {
    std::stringstream ss("n=2\n0 1\n");  // 0 is out of range for 1-based ids
    EXPECT_THROW(asyspa::read_edge_list(ss), asyspa::config_error);
  }
  {
    std::stringstream ss("n=2\n1 1\n");  // self-loop
    EXPECT_THROW(asyspa::read_edge_list(ss), asyspa::config_error);
  }
}

TEST(AsynchronyBounds, EventCountBoundsFromTimingRatios) {
  // n=3, gaps in [1,2], delays up to 2: b1 = 2*floor(2/1)+1 = 5,
  // b2 = 3*floor(2/1) = 6, b = 11.
  auto ab = asyspa::asynchrony_bounds(3, 1.0, 2.0, 2.0);
  EXPECT_EQ(ab.b1, 5);
  EXPECT_EQ(ab.b2, 6);
  EXPECT_EQ(ab.b, 11);

  // Two equal-period nodes with instant delivery: b1 = 2, b2 = 0.
  auto ab2 = asyspa::asynchrony_bounds(2, 1.0, 1.0, 0.0);
  EXPECT_EQ(ab2.b1, 2);
  EXPECT_EQ(ab2.b2, 0);
  EXPECT_EQ(ab2.b, 2);
}

TEST(AsynchronyBounds, ValidatesInputs) {
  EXPECT_THROW(asyspa::asynchrony_bounds(0, 1, 1, 0), std::invalid_argument);
  EXPECT_THROW(asyspa::asynchrony_bounds(2, 0, 1, 0), std::invalid_argument);
  EXPECT_THROW(asyspa::asynchrony_bounds(2, 2, 1, 0), std::invalid_argument);
  EXPECT_THROW(asyspa::asynchrony_bounds(2, 1, 2, -1), std::invalid_argument);
}

}  // namespace
