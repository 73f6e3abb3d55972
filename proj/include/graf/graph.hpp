#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graf/arcs.hpp"
#include "graf/error.hpp"

namespace graf {

/// Heterogeneous input: named node types with counts and typed relations
/// between them (e.g. paper-author).
class TypedGraph {
 public:
  struct Relation {
    std::string from;
    std::string to;
    std::vector<std::pair<NodeId, NodeId>> edges;  // sorted, unique
  };

  void add_node_type(const std::string& name, std::size_t count) {
    auto [it, inserted] = counts_.emplace(name, count);
    if (!inserted) it->second = std::max(it->second, count);
  }

  /// Duplicate edges collapse to one. Endpoints must be valid for their type.
  void add_relation(const std::string& from, const std::string& to, std::vector<std::pair<NodeId, NodeId>> edges) {
    const std::size_t nf = node_count(from), nt = node_count(to);
    for (const auto& [a, b] : edges) {
      if (a >= nf || b >= nt) {
        throw IndexError("relation " + from + "-" + to + ": edge (" + std::to_string(a) + "," + std::to_string(b) +
                         ") outside node counts " + std::to_string(nf) + "/" + std::to_string(nt));
      }
    }
    if (find(from, to) != nullptr || find(to, from) != nullptr) {
      throw CompositionError("relation " + from + "-" + to + " given twice");
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    relations_.push_back(Relation{from, to, std::move(edges)});
  }

  std::size_t node_count(const std::string& type) const {
    auto it = counts_.find(type);
    if (it == counts_.end()) throw CompositionError("unknown node type '" + type + "'");
    return it->second;
  }

  bool has_type(const std::string& type) const { return counts_.count(type) != 0; }

  const Relation* find(const std::string& from, const std::string& to) const {
    for (const auto& r : relations_) {
      if (r.from == from && r.to == to) return &r;
    }
    return nullptr;
  }

  const std::vector<Relation>& relations() const noexcept { return relations_; }
  const std::map<std::string, std::size_t>& node_types() const noexcept { return counts_; }

 private:
  std::map<std::string, std::size_t> counts_;
  std::vector<Relation> relations_;
};

/// Binary, undirected, self-looped network over the anchor nodes for one
/// association. Both directions of every pair are stored as arcs.
struct AssociationNetwork {
  std::string name;
  ArcList arcs;

  std::size_t nodes() const noexcept { return arcs.nodes; }

  /// N_i: neighbors of i (including i itself).
  std::span<const NodeId> neighbors(NodeId i) const {
    return {arcs.col.data() + arcs.offsets[i], arcs.offsets[i + 1] - arcs.offsets[i]};
  }

  std::size_t arc_count() const noexcept { return arcs.size(); }

  /// Unordered pairs, each self-loop counted once.
  std::size_t pair_count() const noexcept { return (arcs.size() + arcs.nodes) / 2; }

  /// Arcs excluding self-loops, i.e. both directions of every proper pair.
  std::size_t off_diagonal_arc_count() const noexcept { return arcs.size() - arcs.nodes; }

  /// Symmetrizes `pairs` and adds every self-loop.
  static AssociationNetwork from_pairs(std::string name, std::size_t n, std::span<const std::pair<NodeId, NodeId>> pairs) {
    std::vector<std::pair<NodeId, NodeId>> all;
    all.reserve(2 * pairs.size() + n);
    for (const auto& [i, j] : pairs) {
      all.emplace_back(i, j);
      all.emplace_back(j, i);
    }
    for (std::size_t i = 0; i < n; ++i) all.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(i));
    return AssociationNetwork{std::move(name), ArcList::from_pairs(n, std::move(all))};
  }

  bool is_symmetric() const {
    for (std::size_t e = 0; e < arcs.size(); ++e) {
      if (!arcs.contains(arcs.col[e], arcs.row[e])) return false;
    }
    return true;
  }

  bool has_all_self_loops() const {
    for (std::size_t i = 0; i < arcs.nodes; ++i) {
      if (!arcs.contains(static_cast<NodeId>(i), static_cast<NodeId>(i))) return false;
    }
    return true;
  }
};

inline std::string meta_path_name(std::span<const std::string> path) {
  std::string name;
  for (const auto& t : path) name += t;
  return name;
}

/// Anchor nodes i, j are joined iff some walk follows the type sequence from
/// i to j. The result is symmetrized, binarized and self-looped.
inline AssociationNetwork compose_meta_path(const TypedGraph& g, std::span<const std::string> path,
                                            const std::string& anchor) {
  if (path.size() < 2) throw CompositionError("meta-path needs at least two node types");
  if (path.front() != anchor || path.back() != anchor) {
    throw CompositionError("meta-path " + meta_path_name(path) + " must start and end at '" + anchor + "'");
  }
  for (const auto& t : path) {
    if (!g.has_type(t)) throw CompositionError("meta-path " + meta_path_name(path) + ": unknown type '" + t + "'");
  }
  const std::size_t n = g.node_count(anchor);

  // Adjacency lists for every hop, oriented along the path.
  std::vector<std::vector<std::vector<NodeId>>> hops;
  for (std::size_t s = 0; s + 1 < path.size(); ++s) {
    const std::string& a = path[s];
    const std::string& b = path[s + 1];
    std::vector<std::vector<NodeId>> adj(g.node_count(a));
    if (const auto* r = g.find(a, b)) {
      for (const auto& [x, y] : r->edges) adj[x].push_back(y);
    } else if (const auto* rt = g.find(b, a)) {
      for (const auto& [y, x] : rt->edges) adj[x].push_back(y);
    } else {
      throw CompositionError("meta-path " + meta_path_name(path) + ": no relation between '" + a + "' and '" + b + "'");
    }
    hops.push_back(std::move(adj));
  }

  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::vector<std::vector<std::size_t>> stamp(path.size());
  for (std::size_t s = 0; s < path.size(); ++s) stamp[s].assign(g.node_count(path[s]), 0);
  std::vector<NodeId> frontier, next;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t mark = i + 1;
    frontier.assign(1, static_cast<NodeId>(i));
    for (std::size_t s = 0; s < hops.size(); ++s) {
      next.clear();
      auto& seen = stamp[s + 1];
      for (NodeId u : frontier) {
        for (NodeId v : hops[s][u]) {
          if (seen[v] != mark) {
            seen[v] = mark;
            next.push_back(v);
          }
        }
      }
      frontier.swap(next);
    }
    for (NodeId j : frontier) pairs.emplace_back(static_cast<NodeId>(i), j);
  }
  return AssociationNetwork::from_pairs(meta_path_name(path), n, pairs);
}

}  // namespace graf
