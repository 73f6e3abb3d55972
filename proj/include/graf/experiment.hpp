#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graf/attention.hpp"
#include "graf/dataset.hpp"
#include "graf/fusion.hpp"
#include "graf/gcn.hpp"
#include "graf/io.hpp"
#include "graf/metrics.hpp"
#include "graf/parallel.hpp"

namespace graf {

enum class VariantKind { Graf, GrafAtt, GrafNode, GrafAsc, GcnSingle, Han };

struct Variant {
  VariantKind kind = VariantKind::Graf;
  std::string association;  // gcn_single only

  bool fuses() const noexcept { return kind != VariantKind::GcnSingle && kind != VariantKind::Han; }

  ScoreVariant score() const noexcept {
    switch (kind) {
      case VariantKind::GrafNode: return ScoreVariant::NodeOnly;
      case VariantKind::GrafAsc: return ScoreVariant::AssocOnly;
      default: return ScoreVariant::Full;
    }
  }

  std::string name() const {
    switch (kind) {
      case VariantKind::Graf: return "graf";
      case VariantKind::GrafAtt: return "graf_att";
      case VariantKind::GrafNode: return "graf_node";
      case VariantKind::GrafAsc: return "graf_asc";
      case VariantKind::GcnSingle: return "gcn_single:" + association;
      case VariantKind::Han: return "han";
    }
    return "?";
  }
};

inline Variant parse_variant(const std::string& s) {
  if (s == "graf") return {VariantKind::Graf, {}};
  if (s == "graf_att") return {VariantKind::GrafAtt, {}};
  if (s == "graf_node") return {VariantKind::GrafNode, {}};
  if (s == "graf_asc") return {VariantKind::GrafAsc, {}};
  if (s == "han") return {VariantKind::Han, {}};
  constexpr std::string_view prefix = "gcn_single:";
  if (s.starts_with(prefix) && s.size() > prefix.size()) return {VariantKind::GcnSingle, s.substr(prefix.size())};
  throw ConfigError("unknown variant '" + s + "' (expected graf, graf_att, graf_node, graf_asc, gcn_single:<association> or han)");
}

enum class Elimination { On, Off, Auto };

inline const char* to_string(Elimination e) {
  switch (e) {
    case Elimination::On: return "on";
    case Elimination::Off: return "off";
    case Elimination::Auto: return "auto";
  }
  return "?";
}

inline Elimination parse_elimination(const std::string& s) {
  if (s == "on") return Elimination::On;
  if (s == "off") return Elimination::Off;
  if (s == "auto") return Elimination::Auto;
  throw ConfigError("elimination must be on, off or auto, got '" + s + "'");
}

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::string variant = "graf";
  std::optional<double> train_fraction;  // empty: original splits
  std::size_t attention_repeats = 10;
  std::size_t eval_repeats = 10;
  std::vector<std::size_t> hidden_sizes{16, 32, 64, 128};
  std::vector<double> learning_rates{0.01, 0.005, 0.001};
  std::uint64_t seed = 0;
  Elimination elimination = Elimination::Auto;
  std::filesystem::path output_dir = "graf_out";
  std::size_t heads = 8;
  std::size_t semantic_hidden = 128;
  double dropout = 0.5;
  double attention_dropout = 0.5;
  Schedule schedule;
  std::size_t kmeans_restarts = 10;
  std::vector<double> sweep_fractions{0.2, 0.4, 0.6, 0.8};

  Variant parsed_variant() const { return parse_variant(variant); }

  void validate() const {
    if (hidden_sizes.empty() || learning_rates.empty()) throw ConfigError("hyperparameter grid is empty");
    if (attention_repeats == 0 || eval_repeats == 0) throw ConfigError("repeat counts must be at least 1");
    parsed_variant();
    for (std::size_t h : hidden_sizes) {
      if (h == 0) throw ConfigError("hidden size 0 in grid");
      if (parsed_variant().kind != VariantKind::GcnSingle && h % heads != 0) {
        throw ConfigError("hidden size " + std::to_string(h) + " is not a multiple of " + std::to_string(heads) + " heads");
      }
    }
    for (double lr : learning_rates) {
      if (!(lr > 0.0)) throw ConfigError("learning rates must be positive");
    }
    if (train_fraction && !(*train_fraction > 0.0 && *train_fraction < 1.0)) throw ConfigError("split fraction must lie in (0,1)");
    if (!(dropout >= 0.0 && dropout < 1.0) || !(attention_dropout >= 0.0 && attention_dropout < 1.0)) {
      throw ConfigError("dropout rates must lie in [0,1)");
    }
    if (schedule.max_epochs == 0) throw ConfigError("max_epochs must be at least 1");
    if (kmeans_restarts == 0) throw ConfigError("kmeans_restarts must be at least 1");
    if (sweep_fractions.empty()) throw ConfigError("sweep_fractions is empty");
    for (double f : sweep_fractions) {
      if (!(f > 0.0 && f < 1.0)) throw ConfigError("sweep fractions must lie in (0,1)");
    }
  }

  std::string split_label() const { return train_fraction ? format_double(*train_fraction) : "original"; }
};

namespace detail {

template <class T>
T config_get(const nlohmann::json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, v] : j.items()) {
    const char* k = key.c_str();
    if (key == "dataset") c.dataset = detail::config_get<std::string>(v, k);
    else if (key == "variant") c.variant = detail::config_get<std::string>(v, k);
    else if (key == "split") {
      if (v.is_string()) {
        if (v.get<std::string>() != "original") throw ConfigError("split must be \"original\" or a train fraction");
        c.train_fraction.reset();
      } else {
        c.train_fraction = detail::config_get<double>(v, k);
      }
    } else if (key == "attention_repeats") c.attention_repeats = detail::config_get<std::size_t>(v, k);
    else if (key == "eval_repeats") c.eval_repeats = detail::config_get<std::size_t>(v, k);
    else if (key == "hidden_sizes") c.hidden_sizes = detail::config_get<std::vector<std::size_t>>(v, k);
    else if (key == "learning_rates") c.learning_rates = detail::config_get<std::vector<double>>(v, k);
    else if (key == "seed") c.seed = detail::config_get<std::uint64_t>(v, k);
    else if (key == "elimination") c.elimination = parse_elimination(detail::config_get<std::string>(v, k));
    else if (key == "output_dir") c.output_dir = detail::config_get<std::string>(v, k);
    else if (key == "heads") c.heads = detail::config_get<std::size_t>(v, k);
    else if (key == "semantic_hidden") c.semantic_hidden = detail::config_get<std::size_t>(v, k);
    else if (key == "dropout") c.dropout = detail::config_get<double>(v, k);
    else if (key == "attention_dropout") c.attention_dropout = detail::config_get<double>(v, k);
    else if (key == "max_epochs") c.schedule.max_epochs = detail::config_get<std::size_t>(v, k);
    else if (key == "min_epochs") c.schedule.min_epochs = detail::config_get<std::size_t>(v, k);
    else if (key == "patience") c.schedule.patience = detail::config_get<std::size_t>(v, k);
    else if (key == "kmeans_restarts") c.kmeans_restarts = detail::config_get<std::size_t>(v, k);
    else if (key == "sweep_fractions") c.sweep_fractions = detail::config_get<std::vector<double>>(v, k);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  if (c.dataset.empty()) throw ConfigError("config needs a dataset directory");
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// summary statistics

struct Stat {
  double median = 0.0;
  double std = 0.0;  // population standard deviation
};

inline Stat summarize(std::vector<double> v) {
  if (v.empty()) throw UsageError("summarize: no values");
  Stat s;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) s.std = 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  s.median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  return s;
}

// ---------------------------------------------------------------------------
// pipeline

struct GridCell {
  std::size_t hidden = 0;
  double lr = 0.0;
  bool eliminate = false;
  std::vector<double> validation_scores;  // one per selection repeat
  double median = 0.0;
};

struct RepeatResult {
  std::uint64_t seed = 0;
  double validation_macro_f1 = 0.0;
  std::vector<int> predictions;  // aligned with RunSummary::test_rows
  MetricReport test;
  Tensor embeddings;
};

struct RunSummary {
  std::string variant;
  std::string dataset;
  std::string split;
  std::uint64_t seed = 0;
  int num_classes = 0;
  std::size_t hidden = 0;
  double lr = 0.0;
  bool eliminated = false;
  std::vector<GridCell> grid;
  std::vector<RepeatResult> repeats;
  std::vector<NodeId> test_rows;
  std::vector<int> test_labels;
  Stat macro_f1, weighted_f1, accuracy;
  std::optional<AttentionBundle> attention;
  std::size_t label_reads[3] = {0, 0, 0};
};

inline std::uint64_t selection_repeat_seed(std::uint64_t seed, std::size_t r) {
  return derive_seed(seed, SeedStage::SelectionRepeat, r);
}
inline std::uint64_t final_repeat_seed(std::uint64_t seed, std::size_t r) { return derive_seed(seed, SeedStage::FinalRepeat, r); }
inline std::uint64_t cell_attention_seed(std::uint64_t seed, std::size_t cell) {
  return derive_seed(seed, SeedStage::AttentionInit, cell);
}

inline AttentionHyper attention_hyper(const ExperimentConfig& c, std::size_t hidden, double lr) {
  AttentionHyper hp;
  hp.hidden = hidden;
  hp.heads = c.heads;
  hp.semantic_hidden = c.semantic_hidden;
  hp.lr = lr;
  hp.feature_dropout = c.attention_dropout;
  hp.schedule = c.schedule;
  return hp;
}

inline GcnHyper gcn_hyper(const ExperimentConfig& c, std::size_t hidden, double lr) {
  return GcnHyper{hidden, lr, c.dropout, c.schedule};
}

namespace detail {

struct Trained {
  double validation = 0.0;
  std::vector<int> predictions;
  Tensor embeddings;
};

inline std::vector<std::size_t> widen(std::span<const NodeId> v) { return {v.begin(), v.end()}; }

}  // namespace detail

/// Hyperparameter selection on validation, then R final retrains scored on
/// the test split. Test labels stay sealed until every model is trained.
inline RunSummary run_pipeline(const ExperimentConfig& cfg, const DatasetBundle& data, const Splits& splits) {
  cfg.validate();
  data.validate();
  splits.validate(data.nodes());
  const Variant variant = cfg.parsed_variant();

  std::vector<AssociationNetwork> nets;
  if (variant.kind == VariantKind::GcnSingle) {
    for (const auto& a : data.associations) {
      if (a.name == variant.association) nets.push_back(a);
    }
    if (nets.empty()) throw ConfigError("dataset " + data.name + " has no association '" + variant.association + "'");
  } else {
    nets = data.associations;
  }
  if (nets.empty()) throw ConfigError("dataset " + data.name + " has no associations");

  LabelGuard guard(data.labels, splits);
  Supervision sup{guard.read(SplitKind::Train), guard.read(SplitKind::Validation), data.num_classes};
  const std::vector<std::size_t> test_rows = detail::widen(splits.test);

  std::vector<bool> elim_options{false};
  if (variant.fuses() && variant.kind != VariantKind::GrafAtt) {
    if (cfg.elimination == Elimination::On) elim_options = {true};
    if (cfg.elimination == Elimination::Auto) elim_options = {false, true};
  }

  struct CellInput {
    std::size_t hidden;
    double lr;
  };
  std::vector<CellInput> cells;
  for (std::size_t h : cfg.hidden_sizes) {
    for (double lr : cfg.learning_rates) cells.push_back({h, lr});
  }

  std::vector<FusedGraph> fused(cells.size());
  std::vector<std::optional<AttentionBundle>> bundles(cells.size());
  if (variant.fuses()) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        bundles[c] = extract_averaged_attention(data.features, nets, sup, attention_hyper(cfg, cells[c].hidden, cells[c].lr),
                                                cfg.attention_repeats, cell_attention_seed(cfg.seed, c));
        fused[c] = fuse(*bundles[c], nets, variant.score());
      } catch (const Error& e) {
        throw Error(e.kind(), std::string("attention (cell " + std::to_string(c) + "): ") + e.what());
      }
    }
  } else if (variant.kind == VariantKind::GcnSingle) {
    for (auto& f : fused) f = unweighted_graph(nets.front());
  }

  const auto train_once = [&](std::size_t c, bool eliminate, std::uint64_t seed, std::span<const std::size_t> rows) {
    detail::Trained t;
    if (variant.kind == VariantKind::Han) {
      auto r = han_predict(data.features, nets, sup, rows, attention_hyper(cfg, cells[c].hidden, cells[c].lr), seed);
      t.validation = r.validation_macro_f1;
      t.predictions = std::move(r.predictions);
      t.embeddings = std::move(r.embeddings);
      return t;
    }
    const FusedGraph graph = eliminate ? eliminate_edges(fused[c], seed) : fused[c];
    auto run = train_gcn(data.features, graph, sup, gcn_hyper(cfg, cells[c].hidden, cells[c].lr), seed);
    t.validation = run.best_validation_macro_f1;
    if (!rows.empty()) {
      t.predictions = argmax_rows(run.model.predict_logits(data.features), rows);
      t.embeddings = run.model.export_embeddings(data.features);
    }
    return t;
  };

  RunSummary s;
  s.variant = variant.name();
  s.dataset = data.name;
  s.split = cfg.split_label();
  s.seed = cfg.seed;
  s.num_classes = data.num_classes;

  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (bool e : elim_options) s.grid.push_back(GridCell{cells[c].hidden, cells[c].lr, e, {}, 0.0});
  }
  const std::size_t R = cfg.eval_repeats;
  std::vector<double> scores(s.grid.size() * R);
  try {
    parallel_for(scores.size(), [&](std::size_t task) {
      const std::size_t g = task / R, r = task % R;
      const std::size_t c = g / elim_options.size();
      scores[task] = train_once(c, s.grid[g].eliminate, selection_repeat_seed(cfg.seed, r), {}).validation;
    });
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("selection: ") + e.what());
  }
  std::size_t best = 0;
  for (std::size_t g = 0; g < s.grid.size(); ++g) {
    s.grid[g].validation_scores.assign(scores.begin() + static_cast<std::ptrdiff_t>(g * R),
                                       scores.begin() + static_cast<std::ptrdiff_t>((g + 1) * R));
    s.grid[g].median = summarize(s.grid[g].validation_scores).median;
    if (s.grid[g].median > s.grid[best].median) best = g;
  }
  const std::size_t best_cell = best / elim_options.size();
  s.hidden = s.grid[best].hidden;
  s.lr = s.grid[best].lr;
  s.eliminated = s.grid[best].eliminate;
  if (bundles[best_cell]) s.attention = *bundles[best_cell];

  std::vector<detail::Trained> finals(R);
  try {
    parallel_for(R, [&](std::size_t r) { finals[r] = train_once(best_cell, s.eliminated, final_repeat_seed(cfg.seed, r), test_rows); });
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("final training: ") + e.what());
  }

  guard.unseal_test();
  const LabeledRows test = guard.read(SplitKind::Test);
  s.test_rows = splits.test;
  s.test_labels = test.labels;
  std::vector<double> mf, wf, acc;
  for (std::size_t r = 0; r < R; ++r) {
    RepeatResult rr;
    rr.seed = final_repeat_seed(cfg.seed, r);
    rr.validation_macro_f1 = finals[r].validation;
    rr.predictions = std::move(finals[r].predictions);
    rr.test = classification_metrics(test.labels, rr.predictions, data.num_classes);
    rr.embeddings = std::move(finals[r].embeddings);
    mf.push_back(rr.test.macro_f1);
    wf.push_back(rr.test.weighted_f1);
    acc.push_back(rr.test.accuracy);
    s.repeats.push_back(std::move(rr));
  }
  s.macro_f1 = summarize(mf);
  s.weighted_f1 = summarize(wf);
  s.accuracy = summarize(acc);
  for (int k = 0; k < 3; ++k) s.label_reads[k] = guard.reads(static_cast<SplitKind>(k));
  return s;
}

inline Splits splits_for(const ExperimentConfig& cfg, const DatasetBundle& data) {
  if (cfg.train_fraction) return generate_splits(data.labels, *cfg.train_fraction, cfg.seed);
  if (!data.original_splits) throw ConfigError("dataset " + data.name + " ships no original splits; set \"split\" to a train fraction");
  return *data.original_splits;
}

inline RunSummary run_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  const DatasetBundle data = load_dataset(cfg.dataset);
  return run_pipeline(cfg, data, splits_for(cfg, data));
}

/// One pipeline per train fraction; all fractions share the seed and hence
/// the test split.
inline std::vector<RunSummary> run_split_sweep(const ExperimentConfig& cfg, const DatasetBundle& data) {
  std::vector<RunSummary> out;
  for (double f : cfg.sweep_fractions) {
    ExperimentConfig c = cfg;
    c.train_fraction = f;
    out.push_back(run_pipeline(c, data, generate_splits(data.labels, f, cfg.seed)));
  }
  return out;
}

inline std::vector<RunSummary> run_split_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_split_sweep(cfg, load_dataset(cfg.dataset));
}

// ---------------------------------------------------------------------------
// clustering

struct ClusterReport {
  std::vector<double> ari;
  std::vector<double> nmi;
  Stat ari_stat, nmi_stat;
  std::size_t k = 0;
};

/// K-means with k = class count on each embedding matrix, scored against the
/// labels. All repeats share one k-means seed so equal embeddings score equally.
inline ClusterReport cluster_embeddings(std::span<const Tensor> embeddings, std::span<const int> labels, int classes,
                                        std::uint64_t seed, std::size_t restarts = 10) {
  if (embeddings.empty()) throw UsageError("no embeddings to cluster");
  ClusterReport rep;
  rep.k = static_cast<std::size_t>(classes);
  rep.ari.resize(embeddings.size());
  rep.nmi.resize(embeddings.size());
  KMeansConfig kc;
  kc.restarts = restarts;
  parallel_for(embeddings.size(), [&](std::size_t r) {
    if (embeddings[r].rows() != labels.size()) throw UsageError("embedding rows differ from label count");
    const auto km = kmeans(embeddings[r], rep.k, derive_seed(seed, SeedStage::KMeans), kc);
    rep.ari[r] = ari(labels, km.assignments);
    rep.nmi[r] = nmi(labels, km.assignments);
  });
  rep.ari_stat = summarize(rep.ari);
  rep.nmi_stat = summarize(rep.nmi);
  return rep;
}

inline std::filesystem::path repeat_dir(const std::filesystem::path& out, std::size_t r) {
  return out / ("repeat_" + std::to_string(r));
}

/// Clusters the embeddings a previous `run` exported under the output dir.
inline ClusterReport run_clustering_eval(const ExperimentConfig& cfg, const DatasetBundle& data) {
  std::vector<Tensor> embeddings;
  for (std::size_t r = 0; r < cfg.eval_repeats; ++r) {
    const auto p = repeat_dir(cfg.output_dir, r) / "embeddings.csv";
    if (!std::filesystem::exists(p)) throw UsageError("missing embeddings " + p.string() + "; run the pipeline first");
    embeddings.push_back(read_embeddings_csv(p));
  }
  return cluster_embeddings(embeddings, data.labels, data.num_classes, cfg.seed, cfg.kmeans_restarts);
}

inline ClusterReport run_clustering_eval(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_clustering_eval(cfg, load_dataset(cfg.dataset));
}

// ---------------------------------------------------------------------------
// reports

inline constexpr const char* kResultsHeader =
    "variant\tdataset\tsplit\thidden\tlr\telimination\tmacro_f1_median\tmacro_f1_std\tweighted_f1_median\tweighted_f1_std\t"
    "accuracy_median\taccuracy_std";

inline std::string results_row(const RunSummary& s) {
  std::string row = s.variant + '\t' + s.dataset + '\t' + s.split + '\t' + std::to_string(s.hidden) + '\t' + format_double(s.lr) + '\t' +
                    (s.eliminated ? "on" : "off");
  for (const Stat* st : {&s.macro_f1, &s.weighted_f1, &s.accuracy}) {
    row += '\t' + format_double(st->median) + '\t' + format_double(st->std);
  }
  return row;
}

inline nlohmann::ordered_json to_json(const Stat& s) {
  nlohmann::ordered_json j;
  j["median"] = s.median;
  j["std"] = s.std;
  return j;
}

inline nlohmann::ordered_json to_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["variant"] = s.variant;
  j["dataset"] = s.dataset;
  j["split"] = s.split;
  j["seed"] = s.seed;
  j["chosen"] = {{"hidden", s.hidden}, {"lr", s.lr}, {"elimination", s.eliminated ? "on" : "off"}};
  j["macro_f1"] = to_json(s.macro_f1);
  j["weighted_f1"] = to_json(s.weighted_f1);
  j["accuracy"] = to_json(s.accuracy);
  auto grid = nlohmann::ordered_json::array();
  for (const auto& g : s.grid) {
    grid.push_back({{"hidden", g.hidden},
                    {"lr", g.lr},
                    {"elimination", g.eliminate ? "on" : "off"},
                    {"validation_macro_f1", g.validation_scores},
                    {"median", g.median}});
  }
  j["grid"] = grid;
  auto reps = nlohmann::ordered_json::array();
  for (const auto& r : s.repeats) {
    nlohmann::ordered_json rj;
    rj["seed"] = r.seed;
    rj["validation_macro_f1"] = r.validation_macro_f1;
    rj["test"] = to_json(r.test);
    reps.push_back(rj);
  }
  j["repeats"] = reps;
  j["label_reads"] = {{"train", s.label_reads[0]}, {"validation", s.label_reads[1]}, {"test", s.label_reads[2]}};
  if (s.attention) {
    nlohmann::ordered_json beta;
    for (std::size_t a = 0; a < s.attention->associations(); ++a) beta[s.attention->names[a]] = s.attention->beta[a];
    j["beta"] = beta;
  }
  return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  auto out = open_output(p);
  out << text;
  if (!out) throw IoError("failed writing " + p.string());
}

/// Writes results.tsv, results.json, metrics.json and attention.json, plus
/// per-repeat embeddings and predictions. Several summaries (a split sweep)
/// get their per-repeat files and attention under split_<label>/.
inline void emit_report(std::span<const RunSummary> summaries, const std::filesystem::path& out) {
  if (summaries.empty()) throw UsageError("emit_report needs at least one summary");
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());

  std::string tsv = std::string(kResultsHeader) + '\n';
  nlohmann::ordered_json results = nlohmann::ordered_json::array();
  nlohmann::ordered_json metrics = nlohmann::ordered_json::array();
  bool wrote_attention = false;
  for (const auto& s : summaries) {
    tsv += results_row(s) + '\n';
    results.push_back(to_json(s));
    for (std::size_t r = 0; r < s.repeats.size(); ++r) {
      nlohmann::ordered_json m = to_json(s.repeats[r].test);
      m["variant"] = s.variant;
      m["dataset"] = s.dataset;
      m["split"] = s.split;
      m["seed"] = s.repeats[r].seed;
      m["repeat"] = r;
      metrics.push_back(m);
    }
    const auto base = summaries.size() == 1 ? out : out / ("split_" + s.split);
    for (std::size_t r = 0; r < s.repeats.size(); ++r) {
      write_embeddings_csv(repeat_dir(base, r) / "embeddings.csv", s.repeats[r].embeddings);
      write_predictions_tsv(repeat_dir(base, r) / "predictions.tsv", s.test_rows, s.test_labels, s.repeats[r].predictions);
    }
    if (s.attention) {
      if (!wrote_attention) write_attention_json(out / "attention.json", *s.attention);
      if (summaries.size() > 1) write_attention_json(base / "attention.json", *s.attention);
      wrote_attention = true;
    }
  }
  write_text(out / "results.tsv", tsv);
  write_text(out / "results.json", results.dump(2) + '\n');
  write_text(out / "metrics.json", metrics.dump(2) + '\n');
}

inline void emit_cluster_report(const ClusterReport& rep, const ExperimentConfig& cfg, const std::filesystem::path& out) {
  nlohmann::ordered_json j;
  j["variant"] = cfg.variant;
  j["k"] = rep.k;
  j["seed"] = cfg.seed;
  j["ari"] = {{"median", rep.ari_stat.median}, {"std", rep.ari_stat.std}, {"values", rep.ari}};
  j["nmi"] = {{"median", rep.nmi_stat.median}, {"std", rep.nmi_stat.std}, {"values", rep.nmi}};
  write_text(out / "clustering.json", j.dump(2) + '\n');
  write_text(out / "clustering.tsv", "variant\tk\tari_median\tari_std\tnmi_median\tnmi_std\n" + cfg.variant + '\t' + std::to_string(rep.k) + '\t' +
                                         format_double(rep.ari_stat.median) + '\t' + format_double(rep.ari_stat.std) + '\t' +
                                         format_double(rep.nmi_stat.median) + '\t' + format_double(rep.nmi_stat.std) + '\n');
}

}  // namespace graf
