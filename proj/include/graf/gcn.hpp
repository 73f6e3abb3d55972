#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "graf/adam.hpp"
#include "graf/attention.hpp"
#include "graf/fusion.hpp"
#include "graf/metrics.hpp"
#include "graf/ops.hpp"
#include "graf/training.hpp"

namespace graf {

/// Symmetric degree scaling A'[i,j] = A[i,j] / sqrt(D_i * D_j) with D the
/// row sums of the (possibly directed) weighted adjacency.
inline std::vector<double> normalize_adjacency(const ArcList& arcs, std::span<const double> weights) {
  if (weights.size() != arcs.size()) throw ShapeError("normalize_adjacency: weight count differs from arc count");
  std::vector<double> degree(arcs.nodes, 0.0);
  for (std::size_t e = 0; e < arcs.size(); ++e) degree[arcs.row[e]] += weights[e];
  for (std::size_t i = 0; i < arcs.nodes; ++i) {
    if (!(degree[i] > 0.0)) throw NormalizationError("node " + std::to_string(i) + " has zero weighted degree");
  }
  std::vector<double> out(arcs.size());
  for (std::size_t e = 0; e < arcs.size(); ++e) {
    out[e] = weights[e] / std::sqrt(degree[arcs.row[e]] * degree[arcs.col[e]]);
  }
  return out;
}

struct GcnHyper {
  std::size_t hidden = 64;
  double lr = 0.01;
  double dropout = 0.5;
  Schedule schedule;
};

/// Two graph-convolution layers over a fixed normalized adjacency:
/// logits = A' relu(A' X W1 + b1) W2 + b2. Dropout acts on X only.
class GcnModel {
 public:
  GcnModel(std::size_t features, int classes, const FusedGraph& graph, const GcnHyper& hp, std::uint64_t seed)
      : arcs_(graph.arcs), dropout_(hp.dropout) {
    const auto w = normalize_adjacency(graph.arcs, graph.score);
    norm_ = Tensor(w.size(), 1, w);
    Rng rng(derive_seed(seed, SeedStage::GcnInit));
    w1 = Parameter("gcn.w1", glorot(features, hp.hidden, rng));
    b1 = Parameter("gcn.b1", Tensor(1, hp.hidden, 0.0));
    w2 = Parameter("gcn.w2", glorot(hp.hidden, static_cast<std::size_t>(classes), rng));
    b2 = Parameter("gcn.b2", Tensor(1, static_cast<std::size_t>(classes), 0.0));
  }

  Parameter w1, b1, w2, b2;

  struct Forward {
    Var hidden;  // post-ReLU first layer
    Var logits;
  };

  std::vector<Parameter*> parameters() { return {&w1, &b1, &w2, &b2}; }
  const ArcList& arcs() const noexcept { return arcs_; }
  const Tensor& normalized_weights() const noexcept { return norm_; }

  Forward forward(Tape& tape, const Tensor& features, bool training, std::uint64_t dropout_seed, bool track = true) {
    const auto bind = [&](Parameter& p) { return track ? tape.watch(p) : tape.view(p.value); };
    Var adj = tape.view(norm_);
    Var x = ops::dropout(tape.view(features), dropout_, training, dropout_seed);
    Var h = ops::relu(ops::add_bias(ops::sparse_aggregate(arcs_, adj, ops::matmul(x, bind(w1))), bind(b1)));
    Var z = ops::add_bias(ops::sparse_aggregate(arcs_, adj, ops::matmul(h, bind(w2))), bind(b2));
    return {h, z};
  }

  /// Logits in inference mode.
  Tensor predict_logits(const Tensor& features) const {
    Tape tape;
    return infer(tape, features).logits.value();
  }

  /// First-layer activations without dropout, one row per node.
  Tensor export_embeddings(const Tensor& features) const {
    Tape tape;
    return infer(tape, features).hidden.value();
  }

 private:
  Forward infer(Tape& tape, const Tensor& features) const {
    Var adj = tape.view(norm_);
    Var h = ops::relu(ops::add_bias(ops::sparse_aggregate(arcs_, adj, ops::matmul(tape.view(features), tape.view(w1.value))), tape.view(b1.value)));
    Var z = ops::add_bias(ops::sparse_aggregate(arcs_, adj, ops::matmul(h, tape.view(w2.value))), tape.view(b2.value));
    return {h, z};
  }

  ArcList arcs_;
  Tensor norm_;
  double dropout_;
};

struct GcnRun {
  GcnModel model;
  double best_validation_macro_f1 = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::vector<double> loss_trace;
};

/// Adam on the train rows; early stopping on validation macro F1 restores
/// the parameters of the best epoch.
inline GcnRun train_gcn(const Tensor& features, const FusedGraph& graph, const Supervision& sup, const GcnHyper& hp,
                        std::uint64_t seed) {
  if (sup.train.size() == 0 || sup.validation.size() == 0) throw EvaluationError("GCN training needs train and validation rows");
  if (graph.nodes() != features.rows()) throw ShapeError("GCN: graph over " + std::to_string(graph.nodes()) + " nodes, features " + to_string(features.shape()));
  GcnRun run{GcnModel(features.cols(), sup.num_classes, graph, hp, seed), 0.0, 0, 0, {}};
  auto params = run.model.parameters();
  Adam adam(AdamConfig{.lr = hp.lr});
  EarlyStopping stopper(hp.schedule);
  std::vector<Tensor> best = snapshot(params);
  for (std::size_t epoch = 1;; ++epoch) {
    {
      Tape tape;
      auto fw = run.model.forward(tape, features, true, derive_seed(seed, SeedStage::GcnDropout, epoch));
      Var loss = ops::cross_entropy(fw.logits, sup.train.rows, sup.train.labels);
      const double lv = loss.value()[0];
      check_finite_loss(lv, epoch, "GCN");
      run.loss_trace.push_back(lv);
      tape.backward(loss);
      adam.step(params);
    }
    const Tensor logits = run.model.predict_logits(features);
    const double score = macro_f1(sup.validation.labels, argmax_rows(logits, sup.validation.rows), sup.num_classes);
    run.epochs_run = epoch;
    if (stopper.observe(epoch, score)) best = snapshot(params);
    if (stopper.should_stop()) break;
  }
  restore(params, best);
  run.best_validation_macro_f1 = stopper.best();
  run.best_epoch = stopper.best_epoch();
  return run;
}

}  // namespace graf
