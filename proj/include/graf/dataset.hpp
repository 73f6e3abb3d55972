#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "graf/graph.hpp"
#include "graf/seed.hpp"
#include "graf/tensor.hpp"

namespace graf {

enum class SplitKind { Train, Validation, Test };

inline const char* to_string(SplitKind k) {
  switch (k) {
    case SplitKind::Train: return "train";
    case SplitKind::Validation: return "validation";
    case SplitKind::Test: return "test";
  }
  return "?";
}

struct Splits {
  std::vector<NodeId> train;
  std::vector<NodeId> validation;
  std::vector<NodeId> test;

  const std::vector<NodeId>& of(SplitKind k) const {
    return k == SplitKind::Train ? train : k == SplitKind::Validation ? validation : test;
  }

  /// Ids in range and pairwise disjoint.
  void validate(std::size_t n) const {
    std::vector<int> owner(n, -1);
    for (SplitKind k : {SplitKind::Train, SplitKind::Validation, SplitKind::Test}) {
      for (NodeId v : of(k)) {
        if (v >= n) throw ConsistencyError(std::string("split ") + to_string(k) + ": node " + std::to_string(v) + " out of range");
        if (owner[v] != -1) {
          throw ConsistencyError("node " + std::to_string(v) + " appears in " +
                                 to_string(static_cast<SplitKind>(owner[v])) + " and " + to_string(k));
        }
        owner[v] = static_cast<int>(k);
      }
    }
  }
};

/// Node ids of one split with their labels, in matching order.
struct LabeledRows {
  std::vector<std::size_t> rows;
  std::vector<int> labels;
  std::size_t size() const noexcept { return rows.size(); }
};

struct DatasetBundle {
  std::string name;
  std::string anchor;
  Tensor features;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<AssociationNetwork> associations;
  std::optional<Splits> original_splits;

  std::size_t nodes() const noexcept { return features.rows(); }

  void validate() const {
    const std::size_t n = features.rows();
    if (labels.size() != n) throw ConsistencyError("labels cover " + std::to_string(labels.size()) + " of " + std::to_string(n) + " nodes");
    for (int y : labels) {
      if (y < 0 || y >= num_classes) throw ConsistencyError("label " + std::to_string(y) + " outside class range");
    }
    for (const auto& a : associations) {
      if (a.nodes() != n) throw ConsistencyError("association " + a.name + " spans " + std::to_string(a.nodes()) + " nodes, expected " + std::to_string(n));
    }
    if (original_splits) original_splits->validate(n);
  }
};

/// Hands out labels split by split, records every read, and refuses test
/// labels until the final evaluation unseals them.
class LabelGuard {
 public:
  LabelGuard(const std::vector<int>& labels, const Splits& splits) : labels_(labels), splits_(splits) {}

  LabeledRows read(SplitKind k) {
    if (k == SplitKind::Test && sealed_) throw HygieneError("test labels read before final evaluation");
    ++reads_[static_cast<int>(k)];
    LabeledRows out;
    for (NodeId v : splits_.of(k)) {
      out.rows.push_back(v);
      out.labels.push_back(labels_[v]);
    }
    return out;
  }

  /// Labels of every node; only available once the test split is unsealed.
  const std::vector<int>& all() {
    if (sealed_) throw HygieneError("full label vector read before final evaluation");
    ++reads_[static_cast<int>(SplitKind::Test)];
    return labels_;
  }

  void unseal_test() noexcept { sealed_ = false; }
  bool sealed() const noexcept { return sealed_; }
  std::size_t reads(SplitKind k) const noexcept { return reads_[static_cast<int>(k)]; }
  const Splits& splits() const noexcept { return splits_; }

 private:
  const std::vector<int>& labels_;
  const Splits& splits_;
  bool sealed_ = true;
  std::size_t reads_[3] = {0, 0, 0};
};

namespace detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw LoadError(LoadErrorKind::MissingFile, "missing file " + p.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

inline std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view s, const std::string& where) {
  s = trim(s);
  T value{};
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw LoadError(LoadErrorKind::Malformed, where + ": cannot parse '" + std::string(s) + "'");
  }
  return value;
}

inline std::vector<std::pair<NodeId, NodeId>> read_edge_file(const std::filesystem::path& p) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& line : read_lines(p)) {
    const auto cols = split_on(line, '\t');
    if (cols.size() < 2) throw LoadError(LoadErrorKind::Malformed, p.filename().string() + ": expected src<TAB>dst");
    const auto a = parse_number<std::int64_t>(cols[0], p.filename().string());
    const auto b = parse_number<std::int64_t>(cols[1], p.filename().string());
    if (a < 0 || b < 0) throw LoadError(LoadErrorKind::EdgeOutOfRange, p.filename().string() + ": negative node id");
    edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
  }
  return edges;
}

inline std::vector<NodeId> read_id_file(const std::filesystem::path& p) {
  std::vector<NodeId> ids;
  for (const auto& line : read_lines(p)) {
    const auto v = parse_number<std::int64_t>(line, p.filename().string());
    if (v < 0) throw LoadError(LoadErrorKind::Malformed, p.filename().string() + ": negative node id");
    ids.push_back(static_cast<NodeId>(v));
  }
  return ids;
}

}  // namespace detail

/// Published partition from split_{train,val,test}.txt.
inline Splits load_original_splits(const std::filesystem::path& dir, std::size_t n) {
  Splits s;
  s.train = detail::read_id_file(dir / "split_train.txt");
  s.validation = detail::read_id_file(dir / "split_val.txt");
  s.test = detail::read_id_file(dir / "split_test.txt");
  s.validate(n);
  return s;
}

struct LoadReport {
  struct Association {
    std::string name;
    std::size_t arcs;            // directed, self-loops included
    std::size_t off_diagonal;    // directed, self-loops excluded
    std::size_t pairs;           // undirected, self-loops counted once
  };
  std::size_t nodes = 0;
  std::size_t features = 0;
  int classes = 0;
  std::vector<Association> associations;
};

inline LoadReport describe(const DatasetBundle& b) {
  LoadReport r;
  r.nodes = b.nodes();
  r.features = b.features.cols();
  r.classes = b.num_classes;
  for (const auto& a : b.associations) r.associations.push_back({a.name, a.arc_count(), a.off_diagonal_arc_count(), a.pair_count()});
  return r;
}

/// Reads a dataset directory:
///   features.csv        n rows of f comma-separated numbers
///   labels.tsv          node_id<TAB>class_id for every node
///   edges_<REL>.tsv     src<TAB>dst for a typed relation, REL = <from><to>
///   meta_paths.json     list of type sequences, e.g. [["P","A","P"]]; an
///                       entry may instead be {"name": "PSP", "edges": "<file>"}
///                       naming a precomposed anchor-anchor edge file
///   split_*.txt         optional published train/val/test partition
inline DatasetBundle load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw LoadError(LoadErrorKind::MissingFile, "dataset directory " + dir.string() + " not found");
  DatasetBundle b;
  b.name = dir.filename().string();
  if (b.name.empty()) b.name = dir.parent_path().filename().string();

  // Features.
  {
    const auto lines = detail::read_lines(dir / "features.csv");
    if (lines.empty()) throw LoadError(LoadErrorKind::Malformed, "features.csv is empty");
    std::vector<double> values;
    std::size_t width = 0;
    for (std::size_t r = 0; r < lines.size(); ++r) {
      const auto cols = detail::split_on(lines[r], ',');
      if (r == 0) width = cols.size();
      if (cols.size() != width) {
        throw LoadError(LoadErrorKind::RaggedFeatures, "features.csv row " + std::to_string(r) + " has " +
                                                           std::to_string(cols.size()) + " values, expected " + std::to_string(width));
      }
      for (auto c : cols) values.push_back(detail::parse_number<double>(c, "features.csv"));
    }
    b.features = Tensor(lines.size(), width, std::move(values));
  }
  const std::size_t n = b.features.rows();

  // Labels.
  {
    b.labels.assign(n, -1);
    for (const auto& line : detail::read_lines(dir / "labels.tsv")) {
      const auto cols = detail::split_on(line, '\t');
      if (cols.size() < 2) throw LoadError(LoadErrorKind::Malformed, "labels.tsv: expected node_id<TAB>class_id");
      const auto node = detail::parse_number<std::int64_t>(cols[0], "labels.tsv");
      const auto cls = detail::parse_number<std::int64_t>(cols[1], "labels.tsv");
      if (node < 0 || static_cast<std::size_t>(node) >= n) {
        throw LoadError(LoadErrorKind::LabelOutOfRange, "labels.tsv: node " + std::to_string(node) + " outside " + std::to_string(n) + " nodes");
      }
      if (cls < 0 || cls > 1'000'000) throw LoadError(LoadErrorKind::LabelOutOfRange, "labels.tsv: class " + std::to_string(cls) + " out of range");
      b.labels[static_cast<std::size_t>(node)] = static_cast<int>(cls);
      b.num_classes = std::max(b.num_classes, static_cast<int>(cls) + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (b.labels[i] < 0) throw LoadError(LoadErrorKind::Malformed, "labels.tsv: node " + std::to_string(i) + " has no label");
    }
  }

  // Meta-paths.
  nlohmann::json listing;
  {
    std::ifstream in(dir / "meta_paths.json");
    if (!in) throw LoadError(LoadErrorKind::MissingFile, "missing file " + (dir / "meta_paths.json").string());
    try {
      in >> listing;
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(LoadErrorKind::Malformed, std::string("meta_paths.json: ") + e.what());
    }
    if (!listing.is_array() || listing.empty()) throw LoadError(LoadErrorKind::Malformed, "meta_paths.json must be a non-empty list");
  }
  std::vector<std::vector<std::string>> paths;
  std::set<std::string> types;
  std::set<std::string> precomposed_files;
  for (const auto& entry : listing) {
    if (entry.is_array()) {
      std::vector<std::string> p;
      for (const auto& t : entry) {
        if (!t.is_string()) throw LoadError(LoadErrorKind::Malformed, "meta_paths.json: node types must be strings");
        p.push_back(t.get<std::string>());
        types.insert(p.back());
      }
      if (p.size() < 2) throw LoadError(LoadErrorKind::Malformed, "meta_paths.json: path shorter than two types");
      if (b.anchor.empty()) b.anchor = p.front();
      paths.push_back(std::move(p));
    } else if (entry.is_object() && entry.contains("name") && entry.contains("edges")) {
      precomposed_files.insert(entry["edges"].get<std::string>());
    } else {
      throw LoadError(LoadErrorKind::Malformed, "meta_paths.json: unrecognized entry " + entry.dump());
    }
  }
  if (b.anchor.empty()) b.anchor = "anchor";

  TypedGraph g;
  g.add_node_type(b.anchor, n);
  struct Pending {
    std::string from, to;
    std::vector<std::pair<NodeId, NodeId>> edges;
  };
  std::vector<Pending> pending;
  std::vector<fs::path> edge_files;
  for (const auto& de : fs::directory_iterator(dir)) {
    const std::string fname = de.path().filename().string();
    if (fname.rfind("edges_", 0) == 0 && de.path().extension() == ".tsv" && !precomposed_files.count(fname)) {
      edge_files.push_back(de.path());
    }
  }
  std::sort(edge_files.begin(), edge_files.end());
  for (const auto& path : edge_files) {
    const std::string rel = path.stem().string().substr(6);
    std::string from, to;
    for (std::size_t cut = 1; cut < rel.size(); ++cut) {
      if (types.count(rel.substr(0, cut)) && types.count(rel.substr(cut))) {
        from = rel.substr(0, cut);
        to = rel.substr(cut);
        break;
      }
    }
    if (from.empty()) continue;  // relation not used by any meta-path
    pending.push_back({from, to, detail::read_edge_file(path)});
  }
  // Non-anchor counts come from the largest id seen.
  std::map<std::string, std::size_t> counts;
  for (const auto& p : pending) {
    for (const auto& [a, c] : p.edges) {
      if (p.from == b.anchor && a >= n) {
        throw LoadError(LoadErrorKind::EdgeOutOfRange, "edges_" + p.from + p.to + ".tsv: node " + std::to_string(a) + " outside " + std::to_string(n) + " anchor nodes");
      }
      if (p.to == b.anchor && c >= n) {
        throw LoadError(LoadErrorKind::EdgeOutOfRange, "edges_" + p.from + p.to + ".tsv: node " + std::to_string(c) + " outside " + std::to_string(n) + " anchor nodes");
      }
      if (p.from != b.anchor) counts[p.from] = std::max<std::size_t>(counts[p.from], std::size_t{a} + 1);
      if (p.to != b.anchor) counts[p.to] = std::max<std::size_t>(counts[p.to], std::size_t{c} + 1);
    }
  }
  for (const auto& t : types) {
    if (t != b.anchor) g.add_node_type(t, counts.count(t) ? counts[t] : 0);
  }
  for (auto& p : pending) g.add_relation(p.from, p.to, std::move(p.edges));

  for (const auto& entry : listing) {
    if (entry.is_array()) {
      std::vector<std::string> p;
      for (const auto& t : entry) p.push_back(t.get<std::string>());
      b.associations.push_back(compose_meta_path(g, p, b.anchor));
    } else {
      const std::string file = entry["edges"].get<std::string>();
      auto edges = detail::read_edge_file(dir / file);
      for (const auto& [a, c] : edges) {
        if (a >= n || c >= n) {
          throw LoadError(LoadErrorKind::EdgeOutOfRange, file + ": node id outside " + std::to_string(n) + " anchor nodes");
        }
      }
      b.associations.push_back(AssociationNetwork::from_pairs(entry["name"].get<std::string>(), n, edges));
    }
  }

  if (fs::exists(dir / "split_train.txt") || fs::exists(dir / "split_val.txt") || fs::exists(dir / "split_test.txt")) {
    b.original_splits = load_original_splits(dir, n);
  }
  b.validate();
  return b;
}

namespace detail {

/// Largest-remainder apportionment of round(fraction * sum(counts)) with
/// per-class bounds [lo_k, hi_k].
inline std::vector<std::size_t> apportion(const std::vector<std::size_t>& counts, double fraction,
                                          const std::vector<std::size_t>& lo, const std::vector<std::size_t>& hi) {
  std::size_t total_count = 0;
  for (auto c : counts) total_count += c;
  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total_count)));
  std::vector<std::size_t> alloc(counts.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t given = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double quota = fraction * static_cast<double>(counts[k]);
    alloc[k] = static_cast<std::size_t>(std::floor(quota));
    given += alloc[k];
    remainders.emplace_back(-(quota - std::floor(quota)), k);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t r = 0; given < target && r < remainders.size(); ++r, ++given) ++alloc[remainders[r].second];
  // Enforce bounds, moving surplus between classes to keep the total.
  for (std::size_t k = 0; k < counts.size(); ++k) {
    while (alloc[k] < lo[k]) {
      ++alloc[k];
      std::size_t donor = counts.size();
      double best = -1e300;
      for (std::size_t d = 0; d < counts.size(); ++d) {
        const double surplus = static_cast<double>(alloc[d]) - fraction * static_cast<double>(counts[d]);
        if (d != k && alloc[d] > lo[d] && surplus > best) {
          best = surplus;
          donor = d;
        }
      }
      if (donor < counts.size()) --alloc[donor];
    }
    while (alloc[k] > hi[k]) {
      --alloc[k];
      std::size_t taker = counts.size();
      double best = 1e300;
      for (std::size_t d = 0; d < counts.size(); ++d) {
        const double surplus = static_cast<double>(alloc[d]) - fraction * static_cast<double>(counts[d]);
        if (d != k && alloc[d] < hi[d] && surplus < best) {
          best = surplus;
          taker = d;
        }
      }
      if (taker < counts.size()) ++alloc[taker];
    }
  }
  return alloc;
}

}  // namespace detail

inline constexpr double kTestFraction = 0.2;

/// Stratified split: 20% test, then `train_fraction` of the remainder for
/// training and the rest for validation. The test set depends on the seed
/// only, so every train fraction shares it.
inline Splits generate_splits(std::span<const int> labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw SplitError("train fraction must lie in (0,1), got " + std::to_string(train_fraction));
  }
  int classes = 0;
  for (int y : labels) {
    if (y < 0) throw SplitError("negative label");
    classes = std::max(classes, y + 1);
  }
  std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) members[static_cast<std::size_t>(labels[i])].push_back(static_cast<NodeId>(i));
  std::vector<std::size_t> counts;
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k].empty()) continue;
    if (members[k].size() < 3) {
      throw SplitError("class " + std::to_string(k) + " has " + std::to_string(members[k].size()) + " members; need 3 to stratify");
    }
  }
  std::erase_if(members, [](const auto& m) { return m.empty(); });
  for (const auto& m : members) counts.push_back(m.size());

  Rng rng(derive_seed(seed, SeedStage::Split));
  for (auto& m : members) shuffle(m.begin(), m.end(), rng);

  const std::size_t K = members.size();
  std::vector<std::size_t> lo(K, 1), hi(K);
  for (std::size_t k = 0; k < K; ++k) hi[k] = counts[k] - 2;
  const auto n_test = detail::apportion(counts, kTestFraction, lo, hi);
  std::vector<std::size_t> rest(K);
  for (std::size_t k = 0; k < K; ++k) {
    rest[k] = counts[k] - n_test[k];
    hi[k] = rest[k] - 1;
  }
  const auto n_train = detail::apportion(rest, train_fraction, lo, hi);

  Splits s;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& m = members[k];
    std::size_t pos = 0;
    for (; pos < n_test[k]; ++pos) s.test.push_back(m[pos]);
    for (std::size_t t = 0; t < n_train[k]; ++t, ++pos) s.train.push_back(m[pos]);
    for (; pos < m.size(); ++pos) s.validation.push_back(m[pos]);
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace graf
