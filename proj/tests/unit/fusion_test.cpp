#include <gtest/gtest.h>

#include <fstream>

#include "support/oracles.hpp"

using namespace graf;
using namespace graf::testing;

namespace {

struct Toy {
  std::vector<AssociationNetwork> nets;
  AttentionBundle bundle;
};

// A: 0-1 plus loops, B: 1-2 plus loops. Arc order per network is (row, col).
Toy toy() {
  const std::vector<std::pair<NodeId, NodeId>> a{{0, 1}}, b{{1, 2}};
  Toy t;
  t.nets = {AssociationNetwork::from_pairs("A", 3, a), AssociationNetwork::from_pairs("B", 3, b)};
  t.bundle = bundle_from_snapshot(t.nets, AttentionSnapshot{{{0.6, 0.4, 0.3, 0.7, 1.0}, {1.0, 0.5, 0.5, 0.2, 0.8}}, {0.75, 0.25}});
  return t;
}

}  // namespace

TEST(Fuse, HandScores) {
  const auto t = toy();
  const auto full = score_full(t.bundle, t.nets);
  EXPECT_DOUBLE_EQ(full.score_of(0, 0), 0.75 * 0.6 + 0.25 * 1.0);
  EXPECT_DOUBLE_EQ(full.score_of(0, 1), 0.75 * 0.4);
  EXPECT_DOUBLE_EQ(full.score_of(1, 1), 0.75 * 0.7 + 0.25 * 0.5);
  EXPECT_DOUBLE_EQ(full.score_of(1, 2), 0.25 * 0.5);
  EXPECT_DOUBLE_EQ(full.score_of(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(full.max_score, 0.75 * 1.0 + 0.25 * 0.8);  // arc (2,2)
  for (NodeId i = 0; i < 3; ++i) EXPECT_NEAR(full.row_sum(i), 1.0, 1e-15);

  const auto node = score_node_only(t.bundle, t.nets);
  EXPECT_DOUBLE_EQ(node.score_of(1, 1), 0.7 + 0.5);
  EXPECT_DOUBLE_EQ(node.score_of(2, 1), 0.2);
  const auto assoc = score_assoc_only(t.bundle, t.nets);
  EXPECT_DOUBLE_EQ(assoc.score_of(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(assoc.score_of(1, 0), 0.75);
  EXPECT_DOUBLE_EQ(assoc.score_of(2, 1), 0.25);
  EXPECT_EQ(assoc.variant, ScoreVariant::AssocOnly);
}

TEST(Fuse, SingleAssociationReductions) {
  Rng rng(1);
  std::vector<AssociationNetwork> one{random_network("A", 12, 0.3, rng)};
  const auto b = random_bundle(one, rng);
  ASSERT_DOUBLE_EQ(b.beta[0], 1.0);
  const auto full = score_full(b, one), node = score_node_only(b, one), assoc = score_assoc_only(b, one);
  EXPECT_EQ(full.score, node.score);
  for (double s : assoc.score) EXPECT_EQ(s, 1.0);
}

TEST(Fuse, MatchesBruteForceOnRandomBundles) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 29, phi = 1 + rng() % 4;
    std::vector<AssociationNetwork> nets;
    for (std::size_t a = 0; a < phi; ++a) nets.push_back(random_network("N" + std::to_string(a), n, uniform(rng, 0.05, 0.5), rng));
    const auto b = random_bundle(nets, rng);
    for (auto v : {ScoreVariant::Full, ScoreVariant::NodeOnly, ScoreVariant::AssocOnly}) {
      const auto g = fuse(b, nets, v);
      const auto oracle = brute_force_scores(b, nets, v);
      ASSERT_EQ(g.arcs.size(), oracle.size());
      for (std::size_t e = 0; e < g.arcs.size(); ++e) {
        EXPECT_NEAR(g.score[e], oracle.at({g.arcs.row[e], g.arcs.col[e]}), 1e-12);
      }
    }
  }
}

TEST(Fuse, ConsistencyErrors) {
  auto t = toy();
  auto missing = t.bundle;
  missing.names[1] = "C";
  EXPECT_THROW(score_full(missing, t.nets), ConsistencyError);

  const std::vector<std::pair<NodeId, NodeId>> extra{{0, 1}, {0, 2}};
  std::vector<AssociationNetwork> wider{AssociationNetwork::from_pairs("A", 3, extra), t.nets[1]};
  EXPECT_THROW(score_full(t.bundle, wider), ConsistencyError);

  auto zero = t.bundle;
  zero.alpha[0][1] = 0.0;
  EXPECT_THROW(score_node_only(zero, std::span<const AssociationNetwork>(t.nets).first(1)), ConsistencyError);
  EXPECT_THROW(parse_score_variant("both"), ConfigError);
}

TEST(Eliminate, KeepsSelfLoopsAndScoresAndIsDeterministic) {
  Rng rng(5);
  std::vector<AssociationNetwork> nets{random_network("A", 40, 0.3, rng), random_network("B", 40, 0.2, rng)};
  const auto g = score_full(random_bundle(nets, rng), nets);
  const auto e1 = eliminate_edges(g, 9), e2 = eliminate_edges(g, 9), e3 = eliminate_edges(g, 10);
  EXPECT_EQ(e1.arcs.row, e2.arcs.row);
  EXPECT_EQ(e1.arcs.col, e2.arcs.col);
  EXPECT_NE(e1.arcs.row, e3.arcs.row);
  EXPECT_TRUE(e1.eliminated);
  EXPECT_LT(e1.arcs.size(), g.arcs.size());
  for (NodeId i = 0; i < 40; ++i) EXPECT_TRUE(e1.arcs.contains(i, i));
  for (std::size_t e = 0; e < e1.arcs.size(); ++e) EXPECT_EQ(e1.score[e], g.score_of(e1.arcs.row[e], e1.arcs.col[e]));
  EXPECT_THROW(eliminate_edges(e1, 1), UsageError);
}

TEST(Eliminate, KeptFractionMatchesExpectation) {
  Rng rng(12);
  FusedGraph g;
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (NodeId i = 0; i < 200; ++i) {
    for (NodeId j = 0; j < 51; ++j) pairs.emplace_back(i, (i + j) % 200);
  }
  g.arcs = ArcList::from_pairs(200, pairs);
  double expected = 0.0;
  std::size_t proper = 0;
  for (std::size_t e = 0; e < g.arcs.size(); ++e) {
    g.score.push_back(uniform(rng, 0.01, 1.0));
    g.max_score = std::max(g.max_score, g.score.back());
  }
  for (std::size_t e = 0; e < g.arcs.size(); ++e) {
    if (g.arcs.row[e] != g.arcs.col[e]) {
      expected += g.score[e] / g.max_score;
      ++proper;
    }
  }
  ASSERT_GE(proper, 10000u);
  const auto kept = eliminate_edges(g, 3);
  const double frac = static_cast<double>(kept.arcs.size() - 200) / static_cast<double>(proper);
  EXPECT_NEAR(frac, expected / static_cast<double>(proper), 0.02);
}

TEST(FusionFiles, AttentionJsonRoundTrip) {
  const auto t = toy();
  const auto dir = scratch_dir("attention_json");
  write_attention_json(dir / "attention.json", t.bundle);
  const auto back = read_attention_json(dir / "attention.json");
  EXPECT_EQ(back.names, t.bundle.names);
  EXPECT_EQ(back.beta, t.bundle.beta);
  EXPECT_EQ(back.alpha, t.bundle.alpha);
  EXPECT_EQ(back.arcs[1].row, t.bundle.arcs[1].row);
  const auto j = nlohmann::json::parse(std::ifstream(dir / "attention.json"));
  EXPECT_EQ(j["repeats"], 1);
  EXPECT_EQ(j["alpha"]["A"][1], nlohmann::json::parse("[0, 1, 0.4]"));
}

TEST(FusionFiles, FusedEdgesUseNineSignificantDigits) {
  const auto t = toy();
  const auto dir = scratch_dir("fused");
  auto g = score_full(t.bundle, t.nets);
  g.score[0] = 1.0 / 3.0;
  write_fused_graph(dir / "fused_edges.tsv", g);
  std::ifstream in(dir / "fused_edges.tsv");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "0\t0\t0.333333333");
  const auto meta = nlohmann::json::parse(std::ifstream(dir / "fused_meta.json"));
  EXPECT_EQ(meta["variant"], "full");
  EXPECT_EQ(meta["eliminated"], false);
}
