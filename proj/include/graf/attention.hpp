#pragma once

// Hierarchical attention model: node-level attention inside every association
// network followed by association-level (semantic) attention, trained end to
// end on the classification loss. The learned attentions are what the fusion
// step consumes.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "graf/adam.hpp"
#include "graf/dataset.hpp"
#include "graf/graph.hpp"
#include "graf/metrics.hpp"
#include "graf/ops.hpp"
#include "graf/parallel.hpp"
#include "graf/seed.hpp"
#include "graf/training.hpp"

namespace graf {

struct AttentionHyper {
  std::size_t hidden = 64;  // heads * per-head width
  std::size_t heads = 8;
  std::size_t semantic_hidden = 128;
  double lr = 0.005;
  double leaky_slope = ops::kDefaultLeakySlope;
  double feature_dropout = 0.5;
  Schedule schedule;

  std::size_t head_width() const {
    if (heads == 0 || hidden % heads != 0) {
      throw ConfigError("hidden size " + std::to_string(hidden) + " is not a multiple of " + std::to_string(heads) + " heads");
    }
    return hidden / heads;
  }
};

/// Labeled train and validation rows; test labels never enter training.
struct Supervision {
  LabeledRows train;
  LabeledRows validation;
  int num_classes = 0;
};

inline std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class AttentionModel {
 public:
  struct Forward {
    Var logits;
    Var embedding;                        // Z, n x hidden
    Var beta;                             // 1 x associations
    std::vector<Var> association_embeddings;
    std::vector<std::vector<Var>> alpha;  // [association][head], arcs x 1
  };

  /// Parameters for one anchor node type: a shared projection, a pair of
  /// attention half-vectors per association and head, semantic attention
  /// (shared across associations) and a linear classifier.
  AttentionModel(std::size_t features, std::span<const AssociationNetwork> nets, int classes, const AttentionHyper& hp,
                 std::uint64_t seed)
      : nets_(nets), hp_(hp) {
    if (nets.empty()) throw ConfigError("attention model needs at least one association");
    const std::size_t d = hp.head_width();
    Rng rng(derive_seed(seed, SeedStage::AttentionInit));
    projection = Parameter("projection", glorot(features, hp.hidden, rng));
    semantic_weight = Parameter("semantic_weight", glorot(hp.hidden, hp.semantic_hidden, rng));
    semantic_bias = Parameter("semantic_bias", Tensor(1, hp.semantic_hidden, 0.0));
    semantic_query = Parameter("semantic_query", glorot(hp.semantic_hidden, 1, rng));
    classifier = Parameter("classifier", glorot(hp.hidden, static_cast<std::size_t>(classes), rng));
    classifier_bias = Parameter("classifier_bias", Tensor(1, static_cast<std::size_t>(classes), 0.0));
    // Per-association streams keyed by name so reordering associations
    // does not change their initial values.
    for (const auto& net : nets) {
      Rng arng(derive_seed(seed, SeedStage::AttentionInit, name_hash(net.name)));
      std::vector<Parameter> left, right;
      for (std::size_t k = 0; k < hp.heads; ++k) {
        // Each half of a 2d x 1 attention vector, initialized as one.
        Tensor full = glorot(2 * d, 1, arng);
        Tensor l(d, 1), r(d, 1);
        for (std::size_t i = 0; i < d; ++i) {
          l[i] = full[i];
          r[i] = full[d + i];
        }
        left.emplace_back(net.name + ".a_left." + std::to_string(k), std::move(l));
        right.emplace_back(net.name + ".a_right." + std::to_string(k), std::move(r));
      }
      attention_left.push_back(std::move(left));
      attention_right.push_back(std::move(right));
    }
  }

  Parameter projection;
  std::vector<std::vector<Parameter>> attention_left;
  std::vector<std::vector<Parameter>> attention_right;
  Parameter semantic_weight;
  Parameter semantic_bias;
  Parameter semantic_query;
  Parameter classifier;
  Parameter classifier_bias;

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out{&projection};
    for (auto& head_list : attention_left) {
      for (auto& p : head_list) out.push_back(&p);
    }
    for (auto& head_list : attention_right) {
      for (auto& p : head_list) out.push_back(&p);
    }
    for (Parameter* p : {&semantic_weight, &semantic_bias, &semantic_query, &classifier, &classifier_bias}) out.push_back(p);
    return out;
  }

  std::span<const AssociationNetwork> associations() const noexcept { return nets_; }
  const AttentionHyper& hyper() const noexcept { return hp_; }

  /// Full forward pass. With `track` false parameters enter the tape as
  /// constants and no gradient closures are recorded.
  Forward forward(Tape& tape, const Tensor& features, bool training, std::uint64_t dropout_seed, bool track = true) {
    const auto bind = [&](Parameter& p) { return track ? tape.watch(p) : tape.view(p.value); };
    const std::size_t d = hp_.head_width();
    Forward out;

    Var x = ops::dropout(tape.view(features), hp_.feature_dropout, training, dropout_seed);
    Var h = ops::matmul(x, bind(projection));

    Var m0 = bind(semantic_weight), b0 = bind(semantic_bias), q = bind(semantic_query);
    std::vector<Var> scores;
    for (std::size_t a = 0; a < nets_.size(); ++a) {
      const ArcList& arcs = nets_[a].arcs;
      std::vector<Var> heads, alphas;
      for (std::size_t k = 0; k < hp_.heads; ++k) {
        Var hk = ops::slice_cols(h, k * d, d);
        Var left = ops::matmul(hk, bind(attention_left[a][k]));
        Var right = ops::matmul(hk, bind(attention_right[a][k]));
        Var e = ops::leaky_relu(ops::edge_pair_scores(arcs, left, right), hp_.leaky_slope);
        Var alpha = ops::segment_softmax(e, arcs.row);
        heads.push_back(ops::elu(ops::sparse_aggregate(arcs, alpha, hk)));
        alphas.push_back(alpha);
      }
      Var z = ops::concat_cols(heads);
      out.association_embeddings.push_back(z);
      out.alpha.push_back(std::move(alphas));
      Var t = ops::tanh(ops::add_bias(ops::matmul(z, m0), b0));
      scores.push_back(ops::mean(ops::matmul(t, q)));
    }
    Var f = ops::concat_cols(scores);
    const std::vector<NodeId> one_segment(nets_.size(), 0);
    out.beta = ops::segment_softmax(f, one_segment);
    out.embedding = ops::elu(ops::weighted_sum(out.association_embeddings, out.beta));
    out.logits = ops::add_bias(ops::matmul(out.embedding, bind(classifier)), bind(classifier_bias));
    return out;
  }

 private:
  std::span<const AssociationNetwork> nets_;
  AttentionHyper hp_;
};

/// Attention values of one trained model: head-averaged alpha per arc of
/// each association (arc order of the network) and beta per association.
struct AttentionSnapshot {
  std::vector<std::vector<double>> alpha;
  std::vector<double> beta;
};

inline AttentionSnapshot take_snapshot(const AttentionModel::Forward& fw) {
  AttentionSnapshot s;
  for (const auto& heads : fw.alpha) {
    std::vector<double> mean(heads.front().value().size(), 0.0);
    for (const Var& h : heads) {
      const auto v = h.value().values();
      for (std::size_t e = 0; e < mean.size(); ++e) mean[e] += v[e];
    }
    for (double& m : mean) m /= static_cast<double>(heads.size());
    s.alpha.push_back(std::move(mean));
  }
  const auto b = fw.beta.value().values();
  s.beta.assign(b.begin(), b.end());
  return s;
}

struct AttentionRun {
  AttentionModel model;
  AttentionSnapshot snapshot;  // at the best validation epoch
  double best_validation_macro_f1 = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::vector<double> loss_trace;
};

/// Trains with Adam on the train rows and keeps the parameters (and the
/// attention snapshot) of the epoch with the best validation macro F1.
inline AttentionRun train_attention_model(const Tensor& features, std::span<const AssociationNetwork> nets,
                                          const Supervision& sup, const AttentionHyper& hp, std::uint64_t seed) {
  if (sup.train.size() == 0 || sup.validation.size() == 0) throw EvaluationError("attention training needs train and validation rows");
  AttentionRun run{AttentionModel(features.cols(), nets, sup.num_classes, hp, seed), {}, 0.0, 0, 0, {}};
  AttentionModel& model = run.model;
  auto params = model.parameters();
  Adam adam(AdamConfig{.lr = hp.lr});
  EarlyStopping stopper(hp.schedule);
  std::vector<Tensor> best_params = snapshot(params);

  for (std::size_t epoch = 1;; ++epoch) {
    {
      Tape tape;
      auto fw = model.forward(tape, features, true, derive_seed(seed, SeedStage::AttentionDropout, epoch));
      Var loss = ops::cross_entropy(fw.logits, sup.train.rows, sup.train.labels);
      const double lv = loss.value()[0];
      check_finite_loss(lv, epoch, "attention model");
      run.loss_trace.push_back(lv);
      tape.backward(loss);
      adam.step(params);
    }
    Tape eval;
    auto fw = model.forward(eval, features, false, 0, false);
    const auto pred = argmax_rows(fw.logits.value(), sup.validation.rows);
    const double score = macro_f1(sup.validation.labels, pred, sup.num_classes);
    run.epochs_run = epoch;
    if (stopper.observe(epoch, score)) {
      best_params = snapshot(params);
      run.snapshot = take_snapshot(fw);
    }
    if (stopper.should_stop()) break;
  }
  restore(params, best_params);
  run.best_validation_macro_f1 = stopper.best();
  run.best_epoch = stopper.best_epoch();
  return run;
}

/// Attentions per association, averaged over repeats.
struct AttentionBundle {
  std::vector<std::string> names;
  std::vector<ArcList> arcs;
  std::vector<std::vector<double>> alpha;  // aligned with arcs[a]
  std::vector<double> beta;
  std::size_t repeats = 0;

  std::size_t associations() const noexcept { return names.size(); }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t a = 0; a < names.size(); ++a) {
      if (names[a] == name) return a;
    }
    throw ConsistencyError("attention bundle has no association '" + name + "'");
  }

  /// alpha of arc (i, j) in association a; throws when the arc is absent.
  double alpha_at(std::size_t a, NodeId i, NodeId j) const {
    const std::size_t e = arcs[a].find(i, j);
    if (e == arcs[a].size()) {
      throw ConsistencyError("arc (" + std::to_string(i) + "," + std::to_string(j) + ") missing from attention for " + names[a]);
    }
    return alpha[a][e];
  }

  /// Largest deviation from 1 over neighborhood alpha sums and the beta sum.
  double normalization_error() const {
    double worst = 0.0;
    for (std::size_t a = 0; a < names.size(); ++a) {
      const ArcList& arc = arcs[a];
      for (std::size_t i = 0; i < arc.nodes; ++i) {
        if (arc.offsets[i] == arc.offsets[i + 1]) continue;
        double s = 0.0;
        for (std::size_t e = arc.offsets[i]; e < arc.offsets[i + 1]; ++e) s += alpha[a][e];
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
    double b = 0.0;
    for (double v : beta) b += v;
    return std::max(worst, std::abs(b - 1.0));
  }
};

inline AttentionBundle bundle_from_snapshot(std::span<const AssociationNetwork> nets, const AttentionSnapshot& s) {
  AttentionBundle b;
  for (const auto& n : nets) {
    b.names.push_back(n.name);
    b.arcs.push_back(n.arcs);
  }
  b.alpha = s.alpha;
  b.beta = s.beta;
  b.repeats = 1;
  return b;
}

/// Arithmetic mean of alpha per arc and beta per association. All bundles
/// must cover the same associations and arcs.
inline AttentionBundle average_bundles(std::span<const AttentionBundle> parts) {
  if (parts.empty()) throw UsageError("average_bundles: nothing to average");
  AttentionBundle out = parts.front();
  out.repeats = 0;
  for (auto& a : out.alpha) std::fill(a.begin(), a.end(), 0.0);
  std::fill(out.beta.begin(), out.beta.end(), 0.0);
  for (const auto& p : parts) {
    if (p.names != out.names) throw ConsistencyError("average_bundles: association lists differ");
    for (std::size_t a = 0; a < out.names.size(); ++a) {
      if (p.arcs[a].row != out.arcs[a].row || p.arcs[a].col != out.arcs[a].col) {
        throw ConsistencyError("average_bundles: arcs of " + out.names[a] + " differ");
      }
      for (std::size_t e = 0; e < out.alpha[a].size(); ++e) out.alpha[a][e] += p.alpha[a][e];
      out.beta[a] += p.beta[a];
    }
    out.repeats += p.repeats;
  }
  const double c = static_cast<double>(parts.size());
  for (auto& a : out.alpha) {
    for (double& v : a) v /= c;
  }
  for (double& v : out.beta) v /= c;
  return out;
}

inline std::uint64_t attention_repeat_seed(std::uint64_t seed, std::size_t repeat) {
  return derive_seed(seed, SeedStage::AttentionInit, 0x10000 + repeat);
}

/// Trains the attention model `repeats` times with distinct seeds and
/// averages the extracted attentions.
inline AttentionBundle extract_averaged_attention(const Tensor& features, std::span<const AssociationNetwork> nets,
                                                  const Supervision& sup, const AttentionHyper& hp, std::size_t repeats,
                                                  std::uint64_t seed) {
  if (repeats == 0) throw ConfigError("attention repeat count must be at least 1");
  std::vector<AttentionBundle> parts(repeats);
  parallel_for(repeats, [&](std::size_t c) {
    try {
      auto run = train_attention_model(features, nets, sup, hp, attention_repeat_seed(seed, c));
      parts[c] = bundle_from_snapshot(nets, run.snapshot);
    } catch (const std::exception& e) {
      throw TrainingError("attention repeat " + std::to_string(c) + ": " + e.what());
    }
  });
  return average_bundles(parts);
}

struct HanResult {
  std::vector<int> predictions;  // aligned with the requested rows
  Tensor embeddings;             // Z for all nodes
  double validation_macro_f1 = 0.0;
};

/// Attention-only baseline: classify `rows` straight from the trained
/// attention model, no fusion.
inline HanResult han_predict(const Tensor& features, std::span<const AssociationNetwork> nets, const Supervision& sup,
                             std::span<const std::size_t> rows, const AttentionHyper& hp, std::uint64_t seed) {
  auto run = train_attention_model(features, nets, sup, hp, seed);
  Tape tape;
  auto fw = run.model.forward(tape, features, false, 0, false);
  HanResult r;
  r.predictions = argmax_rows(fw.logits.value(), rows);
  r.embeddings = fw.embedding.value();
  r.validation_macro_f1 = run.best_validation_macro_f1;
  return r;
}

}  // namespace graf
