#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "graf/error.hpp"

namespace graf {

using NodeId = std::uint32_t;

/// Directed arcs (row -> col) over `nodes` vertices, sorted by (row, col) with
/// no duplicates. `offsets[i]..offsets[i+1]` indexes the arcs leaving row i.
/// For attention, row i is the receiving node and col j its neighbor.
struct ArcList {
  std::size_t nodes = 0;
  std::vector<NodeId> row;
  std::vector<NodeId> col;
  std::vector<std::size_t> offsets;

  std::size_t size() const noexcept { return row.size(); }

  static ArcList from_pairs(std::size_t n, std::vector<std::pair<NodeId, NodeId>> pairs) {
    for (const auto& [i, j] : pairs) {
      if (i >= n || j >= n) {
        throw IndexError("arc (" + std::to_string(i) + "," + std::to_string(j) + ") outside " +
                         std::to_string(n) + " nodes");
      }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    ArcList a;
    a.nodes = n;
    a.row.reserve(pairs.size());
    a.col.reserve(pairs.size());
    a.offsets.assign(n + 1, 0);
    for (const auto& [i, j] : pairs) {
      a.row.push_back(i);
      a.col.push_back(j);
      ++a.offsets[i + 1];
    }
    for (std::size_t i = 0; i < n; ++i) a.offsets[i + 1] += a.offsets[i];
    return a;
  }

  /// Position of arc (i, j), or size() when absent.
  std::size_t find(NodeId i, NodeId j) const {
    if (i >= nodes) return size();
    const auto first = col.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
    const auto last = col.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return size();
    return static_cast<std::size_t>(it - col.begin());
  }

  bool contains(NodeId i, NodeId j) const { return find(i, j) != size(); }
};

}  // namespace graf
