#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "graf/attention.hpp"
#include "graf/dataset.hpp"
#include "graf/fusion.hpp"
#include "graf/metrics.hpp"

namespace graf {

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return std::to_string(x);
  return std::string(buf, ptr);
}

inline std::string format_significant(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

// ---------------------------------------------------------------------------
// attention.json
//   {"beta": {"PAP": 0.66, ...}, "alpha": {"PAP": [[i, j, value], ...], ...},
//    "repeats": 10, "nodes": 3025}

inline void write_attention_json(const std::filesystem::path& path, const AttentionBundle& b) {
  auto out = open_output(path);
  const std::size_t n = b.arcs.empty() ? 0 : b.arcs.front().nodes;
  out << "{\"beta\": {";
  for (std::size_t a = 0; a < b.associations(); ++a) {
    out << (a ? ", " : "") << nlohmann::json(b.names[a]).dump() << ": " << format_double(b.beta[a]);
  }
  out << "}, \"alpha\": {";
  for (std::size_t a = 0; a < b.associations(); ++a) {
    out << (a ? ", " : "") << nlohmann::json(b.names[a]).dump() << ": [";
    const ArcList& arcs = b.arcs[a];
    for (std::size_t e = 0; e < arcs.size(); ++e) {
      out << (e ? ", " : "") << '[' << arcs.row[e] << ", " << arcs.col[e] << ", " << format_double(b.alpha[a][e]) << ']';
    }
    out << ']';
  }
  out << "}, \"repeats\": " << b.repeats << ", \"nodes\": " << n << "}\n";
  if (!out) throw IoError("failed writing " + path.string());
}

inline AttentionBundle read_attention_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadErrorKind::MissingFile, "missing file " + path.string());
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadErrorKind::Malformed, path.string() + ": " + e.what());
  }
  if (!j.contains("beta") || !j.contains("alpha")) throw LoadError(LoadErrorKind::Malformed, path.string() + ": needs beta and alpha");
  AttentionBundle b;
  b.repeats = j.value("repeats", std::size_t{1});
  std::size_t n = j.value("nodes", std::size_t{0});
  for (const auto& [name, arr] : j["alpha"].items()) {
    for (const auto& t : arr) n = std::max<std::size_t>(n, std::max(t.at(0).get<std::size_t>(), t.at(1).get<std::size_t>()) + 1);
  }
  for (const auto& [name, value] : j["beta"].items()) {
    if (!j["alpha"].contains(name)) throw LoadError(LoadErrorKind::Malformed, path.string() + ": no alpha for " + name);
    std::vector<std::pair<NodeId, NodeId>> pairs;
    std::vector<std::tuple<NodeId, NodeId, double>> entries;
    for (const auto& t : j["alpha"][name]) {
      entries.emplace_back(t.at(0).get<NodeId>(), t.at(1).get<NodeId>(), t.at(2).get<double>());
      pairs.emplace_back(std::get<0>(entries.back()), std::get<1>(entries.back()));
    }
    ArcList arcs = ArcList::from_pairs(n, pairs);
    if (arcs.size() != entries.size()) throw LoadError(LoadErrorKind::Malformed, path.string() + ": duplicate arcs in " + name);
    std::vector<double> alpha(arcs.size());
    for (const auto& [i, jj, v] : entries) alpha[arcs.find(i, jj)] = v;
    b.names.push_back(name);
    b.arcs.push_back(std::move(arcs));
    b.alpha.push_back(std::move(alpha));
    b.beta.push_back(value.get<double>());
  }
  return b;
}

// ---------------------------------------------------------------------------
// fused_edges.tsv + fused_meta.json

inline void write_fused_graph(const std::filesystem::path& edges_path, const FusedGraph& g) {
  auto out = open_output(edges_path);
  for (std::size_t e = 0; e < g.arcs.size(); ++e) {
    out << g.arcs.row[e] << '\t' << g.arcs.col[e] << '\t' << format_significant(g.score[e], 9) << '\n';
  }
  if (!out) throw IoError("failed writing " + edges_path.string());
  nlohmann::ordered_json meta;
  meta["variant"] = to_string(g.variant);
  meta["eliminated"] = g.eliminated;
  meta["seed"] = g.elimination_seed;
  meta["max_score"] = g.max_score;
  meta["nodes"] = g.nodes();
  meta["arcs"] = g.arcs.size();
  auto mout = open_output(edges_path.parent_path() / "fused_meta.json");
  mout << meta.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// embeddings.csv, predictions.tsv

inline void write_embeddings_csv(const std::filesystem::path& path, const Tensor& emb) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    for (std::size_t j = 0; j < emb.cols(); ++j) out << (j ? "," : "") << format_double(emb(i, j));
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

inline Tensor read_embeddings_csv(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  std::vector<double> values;
  std::size_t width = 0;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto cols = detail::split_on(lines[r], ',');
    if (r == 0) width = cols.size();
    if (cols.size() != width) throw LoadError(LoadErrorKind::RaggedFeatures, path.string() + ": ragged row " + std::to_string(r));
    for (auto c : cols) values.push_back(detail::parse_number<double>(c, path.string()));
  }
  return Tensor(lines.size(), width, std::move(values));
}

inline void write_predictions_tsv(const std::filesystem::path& path, std::span<const NodeId> rows, std::span<const int> truth,
                                  std::span<const int> pred) {
  auto out = open_output(path);
  for (std::size_t k = 0; k < rows.size(); ++k) out << rows[k] << '\t' << truth[k] << '\t' << pred[k] << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

inline nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["macro_f1"] = r.macro_f1;
  j["weighted_f1"] = r.weighted_f1;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["support"] = r.support;
  return j;
}

}  // namespace graf
