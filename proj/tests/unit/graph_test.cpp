#include <gtest/gtest.h>

#include "support/oracles.hpp"

using namespace graf;
using namespace graf::testing;

namespace {

std::vector<std::pair<NodeId, NodeId>> pairs_of(const AssociationNetwork& net) {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (std::size_t e = 0; e < net.arcs.size(); ++e) out.emplace_back(net.arcs.row[e], net.arcs.col[e]);
  return out;
}

TypedGraph paper_author_subject() {
  // papers 0..3, authors 0..2, subjects 0..1
  TypedGraph g;
  g.add_node_type("P", 4);
  g.add_node_type("A", 3);
  g.add_node_type("S", 2);
  g.add_relation("P", "A", {{0, 0}, {1, 0}, {2, 1}, {3, 2}});
  g.add_relation("S", "P", {{0, 0}, {0, 2}, {1, 3}});
  return g;
}

}  // namespace

TEST(AssociationNetwork, FromPairsSymmetrizesAndSelfLoops) {
  const std::vector<std::pair<NodeId, NodeId>> pairs{{0, 2}, {2, 0}, {1, 2}};
  const auto net = AssociationNetwork::from_pairs("X", 4, pairs);
  EXPECT_TRUE(net.is_symmetric());
  EXPECT_TRUE(net.has_all_self_loops());
  EXPECT_EQ(net.arc_count(), 4u + 4u);
  EXPECT_EQ(net.pair_count(), 2u + 4u);
  EXPECT_EQ(net.off_diagonal_arc_count(), 4u);
  const auto nb = net.neighbors(2);
  EXPECT_EQ(std::vector<NodeId>(nb.begin(), nb.end()), (std::vector<NodeId>{0, 1, 2}));
  const std::vector<std::pair<NodeId, NodeId>> bad{{0, 4}};
  EXPECT_THROW(AssociationNetwork::from_pairs("X", 4, bad), IndexError);
}

TEST(MetaPath, HandExample) {
  const auto g = paper_author_subject();
  const std::vector<std::string> pap{"P", "A", "P"}, psp{"P", "S", "P"};
  const auto a = compose_meta_path(g, pap, "P");
  EXPECT_EQ(a.name, "PAP");
  EXPECT_EQ(pairs_of(a), (std::vector<std::pair<NodeId, NodeId>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 2}, {3, 3}}));
  // relation stored as S->P is traversed backwards for P->S
  const auto s = compose_meta_path(g, psp, "P");
  EXPECT_EQ(pairs_of(s), (std::vector<std::pair<NodeId, NodeId>>{{0, 0}, {0, 2}, {1, 1}, {2, 0}, {2, 2}, {3, 3}}));
}

TEST(MetaPath, Errors) {
  const auto g = paper_author_subject();
  const std::vector<std::string> missing{"P", "T", "P"}, unlinked{"P", "A", "S", "P"}, wrong_end{"P", "A"}, short_path{"P"};
  EXPECT_THROW(compose_meta_path(g, missing, "P"), CompositionError);
  EXPECT_THROW(compose_meta_path(g, unlinked, "P"), CompositionError);
  EXPECT_THROW(compose_meta_path(g, wrong_end, "P"), CompositionError);
  EXPECT_THROW(compose_meta_path(g, short_path, "P"), CompositionError);
  TypedGraph h = paper_author_subject();
  EXPECT_THROW(h.add_relation("A", "P", {{0, 0}}), CompositionError);
  EXPECT_THROW(h.add_relation("P", "T", {{0, 0}}), CompositionError);
  EXPECT_THROW(h.add_relation("A", "S", {{5, 0}}), IndexError);
}

TEST(MetaPath, MatchesWalkEnumerationOnRandomGraphs) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    TypedGraph g;
    const std::vector<std::string> types{"P", "A", "S", "T"};
    for (const auto& t : types) g.add_node_type(t, 1 + rng() % 5);
    for (std::size_t a = 0; a < types.size(); ++a) {
      for (std::size_t b = a + 1; b < types.size(); ++b) {
        if (uniform01(rng) < 0.15) continue;
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (NodeId x = 0; x < g.node_count(types[a]); ++x) {
          for (NodeId y = 0; y < g.node_count(types[b]); ++y) {
            if (uniform01(rng) < 0.3) edges.emplace_back(x, y);
          }
        }
        if (uniform01(rng) < 0.5) g.add_relation(types[a], types[b], edges);
        else {
          for (auto& e : edges) std::swap(e.first, e.second);
          g.add_relation(types[b], types[a], edges);
        }
      }
    }
    const std::size_t len = 2 + rng() % 4;
    std::vector<std::string> path{"P"};
    while (path.size() + 1 < len) {
      std::string next = types[rng() % types.size()];
      while (next == path.back()) next = types[rng() % types.size()];
      path.push_back(next);
    }
    if (path.back() == "P") path.push_back("A");
    path.push_back("P");
    bool linked = true;
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
      linked = linked && path[s] != path[s + 1] && (g.find(path[s], path[s + 1]) || g.find(path[s + 1], path[s]));
    }
    if (!linked) {
      EXPECT_THROW(compose_meta_path(g, path, "P"), CompositionError);
      continue;
    }
    const auto net = compose_meta_path(g, path, "P");
    const auto oracle = walk_pairs(g, path);
    const std::vector<std::pair<NodeId, NodeId>> expect(oracle.begin(), oracle.end());
    EXPECT_EQ(pairs_of(net), expect) << meta_path_name(path);
  }
}
