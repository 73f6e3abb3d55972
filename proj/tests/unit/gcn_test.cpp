#include <gtest/gtest.h>

#include <cmath>

#include "support/synthetic.hpp"

using namespace graf;
using namespace graf::testing;

namespace {

FusedGraph path3() {
  const std::vector<std::pair<NodeId, NodeId>> p{{0, 1}, {1, 2}};
  return unweighted_graph(AssociationNetwork::from_pairs("P", 3, p));
}

}  // namespace

TEST(NormalizeAdjacency, PathGraphByHand) {
  const auto g = path3();
  const auto w = normalize_adjacency(g.arcs, g.score);
  // degrees 2, 3, 2; arcs (0,0) (0,1) (1,0) (1,1) (1,2) (2,1) (2,2)
  const std::vector<double> expect{1.0 / 2, 1 / std::sqrt(6.0), 1 / std::sqrt(6.0), 1.0 / 3, 1 / std::sqrt(6.0), 1 / std::sqrt(6.0), 1.0 / 2};
  ASSERT_EQ(w.size(), expect.size());
  for (std::size_t e = 0; e < w.size(); ++e) EXPECT_NEAR(w[e], expect[e], 1e-15);
}

TEST(NormalizeAdjacency, UsesRowSumsOfWeightedDirectedGraph) {
  const ArcList arcs = ArcList::from_pairs(2, {{0, 0}, {0, 1}, {1, 1}});
  const std::vector<double> s{0.5, 1.5, 4.0};
  const auto w = normalize_adjacency(arcs, s);
  EXPECT_NEAR(w[1], 1.5 / std::sqrt(2.0 * 4.0), 1e-15);
  const ArcList lonely = ArcList::from_pairs(2, {{0, 0}});
  EXPECT_THROW(normalize_adjacency(lonely, std::vector<double>{1.0}), NormalizationError);
}

TEST(GcnModel, ForwardMatchesDenseComputation) {
  const auto g = path3();
  GcnModel m(2, 2, g, GcnHyper{2, 0.01, 0.5, {}}, 0);
  m.w1.value = Tensor::from_rows({{1.0, -0.5}, {0.25, 2.0}});
  m.b1.value = Tensor::from_rows({{0.1, -0.3}});
  m.w2.value = Tensor::from_rows({{0.7, -1.2}, {0.4, 0.9}});
  m.b2.value = Tensor::from_rows({{0.0, 0.2}});
  const Tensor X = Tensor::from_rows({{1.0, 2.0}, {-1.0, 0.5}, {0.0, -3.0}});

  const double r6 = 1 / std::sqrt(6.0);
  const double A[3][3] = {{0.5, r6, 0}, {r6, 1.0 / 3, r6}, {0, r6, 0.5}};
  double xw[3][2], h[3][2], hw[3][2], z[3][2];
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 2; ++c) xw[i][c] = X(i, 0) * m.w1.value(0, c) + X(i, 1) * m.w1.value(1, c);
  }
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 2; ++c) {
      double s = m.b1.value(0, c);
      for (int j = 0; j < 3; ++j) s += A[i][j] * xw[j][c];
      h[i][c] = std::max(0.0, s);
    }
  }
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 2; ++c) hw[i][c] = h[i][0] * m.w2.value(0, c) + h[i][1] * m.w2.value(1, c);
  }
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 2; ++c) {
      z[i][c] = m.b2.value(0, c);
      for (int j = 0; j < 3; ++j) z[i][c] += A[i][j] * hw[j][c];
    }
  }
  const Tensor logits = m.predict_logits(X);
  const Tensor emb = m.export_embeddings(X);
  for (int i = 0; i < 3; ++i) {
    for (int c = 0; c < 2; ++c) {
      EXPECT_NEAR(logits(i, c), z[i][c], 1e-14);
      EXPECT_NEAR(emb(i, c), h[i][c], 1e-14);
    }
  }
}

TEST(GcnModel, StructuralTwinsGetIdenticalOutputs) {
  // 0 and 1 hang off 2 with equal features; their rows of A' mirror each other.
  const std::vector<std::pair<NodeId, NodeId>> p{{0, 2}, {1, 2}, {2, 3}};
  const auto g = unweighted_graph(AssociationNetwork::from_pairs("T", 4, p));
  GcnModel m(3, 2, g, GcnHyper{8, 0.01, 0.5, {}}, 4);
  const Tensor X = Tensor::from_rows({{1, 0, 2}, {1, 0, 2}, {0, 1, 0}, {3, 3, 3}});
  const Tensor z = m.predict_logits(X);
  EXPECT_EQ(z(0, 0), z(1, 0));
  EXPECT_EQ(z(0, 1), z(1, 1));
}

TEST(TrainGcn, SeparatesAPlantedToy) {
  const auto d = planted_dataset(30, 3, 6, 2.0, {{"A", 0.3, 0.0}}, 3);
  const Splits s = generate_splits(d.labels, 0.5, 3);
  GcnHyper hp{16, 0.01, 0.5, short_schedule(200, 50, 30)};
  const auto run = train_gcn(d.features, unweighted_graph(d.associations[0]), supervision_for(d, s), hp, 1);
  const std::vector<std::size_t> rows(s.test.begin(), s.test.end());
  std::vector<int> truth;
  for (auto r : rows) truth.push_back(d.labels[r]);
  const auto pred = argmax_rows(run.model.predict_logits(d.features), rows);
  EXPECT_EQ(classification_metrics(truth, pred, 3).accuracy, 1.0);
  EXPECT_LT(run.loss_trace.back(), run.loss_trace.front());
}

TEST(TrainGcn, DeterministicForFixedSeedAndRestoresBestEpoch) {
  const auto d = planted_dataset(12, 3, 5, 0.3, {{"A", 0.3, 0.1}}, 8);
  const Splits s = generate_splits(d.labels, 0.4, 8);
  const auto sup = supervision_for(d, s);
  GcnHyper hp{8, 0.01, 0.5, short_schedule(80, 20, 10)};
  const auto g = unweighted_graph(d.associations[0]);
  const auto r1 = train_gcn(d.features, g, sup, hp, 5);
  const auto r2 = train_gcn(d.features, g, sup, hp, 5);
  const auto r3 = train_gcn(d.features, g, sup, hp, 6);
  EXPECT_EQ(r1.loss_trace, r2.loss_trace);
  EXPECT_EQ(r1.model.w1.value, r2.model.w1.value);
  EXPECT_NE(r1.loss_trace, r3.loss_trace);

  auto model = r1.model;
  const auto pred = argmax_rows(model.predict_logits(d.features), sup.validation.rows);
  EXPECT_EQ(macro_f1(sup.validation.labels, pred, 3), r1.best_validation_macro_f1);
  EXPECT_LE(r1.best_epoch, r1.epochs_run);
  EXPECT_GE(r1.epochs_run, 20u);
}

TEST(TrainGcn, StopsAfterPatienceButNotBeforeMinimum) {
  EarlyStopping es(Schedule{100, 10, 3});
  for (std::size_t e = 1; e <= 5; ++e) {
    es.observe(e, 0.5);
    EXPECT_FALSE(es.should_stop());
  }
  for (std::size_t e = 6; e <= 9; ++e) es.observe(e, 0.5);
  EXPECT_FALSE(es.should_stop());
  es.observe(10, 0.4);
  EXPECT_TRUE(es.should_stop());
  EXPECT_EQ(es.best_epoch(), 1u);
}

TEST(TrainGcn, RejectsEmptySupervisionAndMismatchedGraph) {
  const auto d = planted_dataset(5, 3, 4, 0.3, {{"A", 0.3, 0.1}}, 1);
  Supervision empty;
  empty.num_classes = 3;
  EXPECT_THROW(train_gcn(d.features, unweighted_graph(d.associations[0]), empty, GcnHyper{}, 1), EvaluationError);
  const auto small = planted_dataset(4, 3, 4, 0.3, {{"A", 0.3, 0.1}}, 1);
  const Splits s = generate_splits(d.labels, 0.5, 1);
  EXPECT_THROW(train_gcn(d.features, unweighted_graph(small.associations[0]), supervision_for(d, s), GcnHyper{}, 1), ShapeError);
}
