#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "graf/attention.hpp"
#include "graf/graph.hpp"
#include "graf/seed.hpp"

namespace graf {

enum class ScoreVariant { Full, NodeOnly, AssocOnly };

inline const char* to_string(ScoreVariant v) {
  switch (v) {
    case ScoreVariant::Full: return "full";
    case ScoreVariant::NodeOnly: return "node_only";
    case ScoreVariant::AssocOnly: return "assoc_only";
  }
  return "?";
}

inline ScoreVariant parse_score_variant(const std::string& s) {
  if (s == "full") return ScoreVariant::Full;
  if (s == "node_only") return ScoreVariant::NodeOnly;
  if (s == "assoc_only") return ScoreVariant::AssocOnly;
  throw ConfigError("unknown scoring variant '" + s + "' (expected full, node_only or assoc_only)");
}

/// Directed weighted graph over the anchor nodes; score[e] belongs to arc e.
struct FusedGraph {
  ArcList arcs;
  std::vector<double> score;
  ScoreVariant variant = ScoreVariant::Full;
  bool eliminated = false;
  std::uint64_t elimination_seed = 0;
  double max_score = 0.0;

  std::size_t nodes() const noexcept { return arcs.nodes; }

  double score_of(NodeId i, NodeId j) const {
    const std::size_t e = arcs.find(i, j);
    return e == arcs.size() ? 0.0 : score[e];
  }

  double row_sum(NodeId i) const {
    double s = 0.0;
    for (std::size_t e = arcs.offsets[i]; e < arcs.offsets[i + 1]; ++e) s += score[e];
    return s;
  }
};

namespace detail {

struct Contribution {
  NodeId i, j;
  double weighted;  // beta * alpha
  double alpha;
  double beta;
};

}  // namespace detail

/// Scores every arc of the union of `nets` from the bundle:
///   Full       sum over associations containing the arc of beta * alpha
///   NodeOnly   sum of alpha
///   AssocOnly  mean of beta over the associations containing the arc
inline FusedGraph fuse(const AttentionBundle& bundle, std::span<const AssociationNetwork> nets, ScoreVariant variant) {
  if (nets.empty()) throw ConsistencyError("fusion needs at least one association");
  const std::size_t n = nets.front().nodes();
  std::vector<detail::Contribution> parts;
  for (const auto& net : nets) {
    if (net.nodes() != n) throw ConsistencyError("association " + net.name + " has a different node count");
    const std::size_t a = bundle.index_of(net.name);
    const bool aligned = bundle.arcs[a].row == net.arcs.row && bundle.arcs[a].col == net.arcs.col;
    const double beta = bundle.beta[a];
    for (std::size_t e = 0; e < net.arcs.size(); ++e) {
      const NodeId i = net.arcs.row[e], j = net.arcs.col[e];
      const double alpha = aligned ? bundle.alpha[a][e] : bundle.alpha_at(a, i, j);
      parts.push_back({i, j, beta * alpha, alpha, beta});
    }
  }
  std::stable_sort(parts.begin(), parts.end(), [](const auto& x, const auto& y) { return std::tie(x.i, x.j) < std::tie(y.i, y.j); });

  FusedGraph g;
  g.variant = variant;
  g.arcs.nodes = n;
  g.arcs.offsets.assign(n + 1, 0);
  for (std::size_t p = 0; p < parts.size();) {
    std::size_t q = p;
    double weighted = 0.0, alpha = 0.0, beta = 0.0;
    for (; q < parts.size() && parts[q].i == parts[p].i && parts[q].j == parts[p].j; ++q) {
      weighted += parts[q].weighted;
      alpha += parts[q].alpha;
      beta += parts[q].beta;
    }
    double s = 0.0;
    switch (variant) {
      case ScoreVariant::Full: s = weighted; break;
      case ScoreVariant::NodeOnly: s = alpha; break;
      case ScoreVariant::AssocOnly: s = beta / static_cast<double>(q - p); break;
    }
    if (!(std::isfinite(s) && s > 0.0)) {
      throw ConsistencyError("arc (" + std::to_string(parts[p].i) + "," + std::to_string(parts[p].j) + ") scored " + std::to_string(s));
    }
    g.arcs.row.push_back(parts[p].i);
    g.arcs.col.push_back(parts[p].j);
    ++g.arcs.offsets[parts[p].i + 1];
    g.score.push_back(s);
    g.max_score = std::max(g.max_score, s);
    p = q;
  }
  for (std::size_t i = 0; i < n; ++i) g.arcs.offsets[i + 1] += g.arcs.offsets[i];
  return g;
}

inline FusedGraph score_full(const AttentionBundle& b, std::span<const AssociationNetwork> nets) {
  return fuse(b, nets, ScoreVariant::Full);
}
inline FusedGraph score_node_only(const AttentionBundle& b, std::span<const AssociationNetwork> nets) {
  return fuse(b, nets, ScoreVariant::NodeOnly);
}
inline FusedGraph score_assoc_only(const AttentionBundle& b, std::span<const AssociationNetwork> nets) {
  return fuse(b, nets, ScoreVariant::AssocOnly);
}

/// Networks implied by the arcs a bundle carries.
inline std::vector<AssociationNetwork> networks_of(const AttentionBundle& b) {
  std::vector<AssociationNetwork> nets;
  for (std::size_t a = 0; a < b.associations(); ++a) nets.push_back(AssociationNetwork{b.names[a], b.arcs[a]});
  return nets;
}

/// Keeps each non-self-loop arc independently with probability
/// score / max_score. Self-loops always stay; kept arcs keep their score.
inline FusedGraph eliminate_edges(const FusedGraph& g, std::uint64_t seed) {
  if (g.eliminated) throw UsageError("fused graph has already been through elimination");
  Rng rng(derive_seed(seed, SeedStage::Elimination));
  FusedGraph out;
  out.variant = g.variant;
  out.eliminated = true;
  out.elimination_seed = seed;
  out.max_score = g.max_score;
  out.arcs.nodes = g.arcs.nodes;
  out.arcs.offsets.assign(g.arcs.nodes + 1, 0);
  for (std::size_t e = 0; e < g.arcs.size(); ++e) {
    const NodeId i = g.arcs.row[e], j = g.arcs.col[e];
    if (i != j) {
      const double keep = g.score[e] / g.max_score;
      if (!(uniform01(rng) < keep)) continue;
    }
    out.arcs.row.push_back(i);
    out.arcs.col.push_back(j);
    ++out.arcs.offsets[i + 1];
    out.score.push_back(g.score[e]);
  }
  for (std::size_t i = 0; i < out.arcs.nodes; ++i) out.arcs.offsets[i + 1] += out.arcs.offsets[i];
  return out;
}

/// Binary adjacency of one association, used by the single-network GCN baseline.
inline FusedGraph unweighted_graph(const AssociationNetwork& net) {
  FusedGraph g;
  g.arcs = net.arcs;
  g.score.assign(net.arcs.size(), 1.0);
  g.max_score = 1.0;
  return g;
}

}  // namespace graf
