#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"

using namespace graf;
using namespace graf::testing;

TEST(OpsForward, HandValues) {
  Tape t;
  Var x = t.constant(Tensor::from_rows({{-2.0, 0.0, 3.0}}));
  EXPECT_EQ(ops::relu(x).value(), Tensor::from_rows({{0.0, 0.0, 3.0}}));
  EXPECT_EQ(ops::leaky_relu(x).value(), Tensor::from_rows({{-0.4, 0.0, 3.0}}));
  EXPECT_DOUBLE_EQ(ops::elu(x).value()[0], std::exp(-2.0) - 1.0);
  EXPECT_DOUBLE_EQ(ops::mean(x).value()[0], 1.0 / 3.0);
  EXPECT_EQ(ops::slice_cols(x, 1, 2).value(), Tensor::from_rows({{0.0, 3.0}}));
  EXPECT_EQ(ops::concat_cols({x, x}).value(), Tensor::from_rows({{-2.0, 0.0, 3.0, -2.0, 0.0, 3.0}}));
}

TEST(OpsForward, SegmentSoftmaxNormalizesEachGroupAndSurvivesLargeScores) {
  Tape t;
  Var s = t.constant(Tensor(5, 1, std::vector<double>{1000.0, 1001.0, -5.0, 2.0, 2.0}));
  const std::vector<NodeId> seg{0, 0, 1, 2, 2};
  const Tensor y = ops::segment_softmax(s, seg).value();
  EXPECT_NEAR(y[0] + y[1], 1.0, 1e-15);
  EXPECT_NEAR(y[1], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_DOUBLE_EQ(y[2], 1.0);
  EXPECT_DOUBLE_EQ(y[3], 0.5);
}

TEST(OpsForward, CrossEntropyMatchesLogSoftmax) {
  Tape t;
  Var z = t.constant(Tensor::from_rows({{1.0, 2.0}, {0.0, 0.0}, {3.0, -1.0}}));
  const std::vector<std::size_t> rows{0, 2};
  const std::vector<int> labels{1, 0};
  const double expect = 0.5 * (std::log(std::exp(1.0) + std::exp(2.0)) - 2.0 + std::log(std::exp(3.0) + std::exp(-1.0)) - 3.0);
  EXPECT_NEAR(ops::cross_entropy(z, rows, labels).value()[0], expect, 1e-14);
  const std::vector<int> bad{2, 0};
  EXPECT_THROW(ops::cross_entropy(z, rows, bad), IndexError);
  EXPECT_THROW(ops::cross_entropy(z, std::vector<std::size_t>{}, std::vector<int>{}), EvaluationError);
}

TEST(OpsForward, DropoutScalesSurvivorsAndIsIdentityAtInference) {
  Tape t;
  Var x = t.constant(Tensor(20, 20, 1.0));
  const Tensor y = ops::dropout(x, 0.5, true, 3).value();
  std::size_t kept = 0;
  for (double v : y.values()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    kept += v != 0.0;
  }
  EXPECT_GT(kept, 150u);
  EXPECT_LT(kept, 250u);
  EXPECT_EQ(ops::dropout(x, 0.5, false, 3).value(), Tensor(20, 20, 1.0));
  EXPECT_EQ(ops::dropout(x, 0.5, true, 3).value(), y);
  EXPECT_THROW(ops::dropout(x, 1.0, true, 3), ParameterError);
}

TEST(OpsForward, SparseAggregateAndEdgePairScores) {
  const ArcList arcs = ArcList::from_pairs(3, {{0, 0}, {0, 2}, {1, 0}, {2, 2}});
  Tape t;
  Var x = t.constant(Tensor::from_rows({{1, 10}, {2, 20}, {3, 30}}));
  Var w = t.constant(Tensor(4, 1, std::vector<double>{0.5, 2.0, 1.0, -1.0}));
  EXPECT_EQ(ops::sparse_aggregate(arcs, w, x).value(), Tensor::from_rows({{6.5, 65}, {1, 10}, {-3, -30}}));
  Var rs = t.constant(Tensor(3, 1, std::vector<double>{1, 2, 3}));
  Var cs = t.constant(Tensor(3, 1, std::vector<double>{10, 20, 30}));
  EXPECT_EQ(ops::edge_pair_scores(arcs, rs, cs).value(), Tensor(4, 1, std::vector<double>{11, 31, 12, 33}));
  EXPECT_THROW(ops::sparse_aggregate(arcs, t.constant(Tensor(3, 1)), x), ShapeError);
}

TEST(OpsForward, MatmulSkipsZerosWithoutChangingResult) {
  Rng rng(5);
  Tensor a = random_tensor(6, 7, rng);
  for (std::size_t i = 0; i < a.size(); i += 3) a[i] = 0.0;
  const Tensor b = random_tensor(7, 4, rng);
  Tape t;
  const Tensor c = ops::matmul(t.constant(a), t.constant(b)).value();
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < 7; ++p) s += a(i, p) * b(p, j);
      EXPECT_NEAR(c(i, j), s, 1e-14);
    }
  }
}

class GradientBattery : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(GradientBattery, MatchesCentralDifferences) {
  for (const auto& c : gradient_battery(GetParam())) {
    EXPECT_LT(c.error, 1e-4) << c.name << " seed " << GetParam();
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradientBattery, ::testing::Range<std::uint64_t>(1, 9));
