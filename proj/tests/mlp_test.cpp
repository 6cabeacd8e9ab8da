// Copyright 2026 The sparsync Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "sparsync/mlp.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "acceptance/oracles.hpp"
#include "sparsync/dataset.hpp"
#include "sparsync/error.hpp"

namespace sparsync {
namespace {

std::vector<std::vector<double>> as_double(const MlpModel& m) {
  std::vector<std::vector<double>> out;
  for (const auto& t : m.params()) out.emplace_back(t.begin(), t.end());
  return out;
}

Batch random_batch(std::size_t rows, std::size_t cols, int classes, Rng& rng) {
  Batch b;
  b.rows = rows;
  b.cols = cols;
  for (std::size_t i = 0; i < rows * cols; ++i) b.inputs.push_back(static_cast<float>(rng.normal()));
  for (std::size_t i = 0; i < rows; ++i) b.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))));
  return b;
}

TEST(Mlp, LinearMseClosedForm) {
  MlpSpec spec;
  spec.sizes = {3, 1};
  spec.loss = LossKind::kMeanSquaredError;
  MlpModel m(spec);
  m.params()[0] = DenseTensor{0.5f, -1.0f, 2.0f};
  m.params()[1] = DenseTensor{0.25f};
  Batch b;
  b.rows = 1;
  b.cols = 3;
  b.inputs = {1.0f, 2.0f, -0.5f};
  b.targets = {1.5f};
  const auto g = forward_backward(m, b);
  // y = 0.5 - 2 - 1 + 0.25 = -2.25, residual y - t = -3.75
  const double r = -3.75;
  EXPECT_NEAR(g.loss_sum, r * r, 1e-12);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(g.grads[0][i], 2 * r * b.inputs[i], 1e-6);
  EXPECT_NEAR(g.grads[1][0], 2 * r, 1e-6);
}

TEST(Mlp, ZeroLossZeroGradient) {
  MlpSpec spec;
  spec.sizes = {2, 2};
  spec.loss = LossKind::kMeanSquaredError;
  MlpModel m(spec);
  m.params()[0] = DenseTensor{1, 0, 0, 1};
  Batch b;
  b.rows = 2;
  b.cols = 2;
  b.inputs = {0.3f, -0.7f, 1.5f, 2.0f};
  b.targets = b.inputs;
  const auto g = forward_backward(m, b);
  EXPECT_EQ(g.loss_sum, 0.0);
  for (const auto& t : g.grads)
    for (float v : t) EXPECT_EQ(v, 0.0f);
}

TEST(Mlp, ShapeMismatch) {
  MlpModel m(MlpSpec{});
  Batch b;
  b.rows = 1;
  b.cols = 3;
  b.inputs = {1, 2, 3};
  b.labels = {0};
  EXPECT_THROW(forward_backward(m, b), ShapeError);
}

struct FdCase {
  Activation act;
  LossKind loss;
};

class FiniteDifference : public ::testing::TestWithParam<FdCase> {};

// Central differences of the double-precision oracle loss against the
// analytic gradient, coordinate by coordinate.
TEST_P(FiniteDifference, MatchesAnalyticGradient) {
  MlpSpec spec;
  spec.sizes = {5, 4, 3};
  spec.hidden = GetParam().act;
  spec.loss = GetParam().loss;
  Rng rng(77);
  const MlpModel m = MlpModel::initialized(spec, rng);
  const Batch b = random_batch(6, 5, 3, rng);
  const auto g = forward_backward(m, b);
  auto params = as_double(m);
  const double n = static_cast<double>(b.rows);
  EXPECT_NEAR(g.loss_sum / n, oracle::mlp_loss(spec, params, b), 1e-9);

  const double h = 1e-6;
  int checked = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double keep = params[t][i];
      params[t][i] = keep + h;
      const double up = oracle::mlp_loss(spec, params, b);
      params[t][i] = keep - h;
      const double down = oracle::mlp_loss(spec, params, b);
      params[t][i] = keep;
      const double fd = (up - down) / (2 * h) * n;  // gradients are batch sums
      const double an = g.grads[t][i];
      EXPECT_LE(std::fabs(fd - an), 1e-4 * std::max(1.0, std::fabs(fd)))
          << "tensor " << t << " coord " << i;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 5 * 4 + 4 + 4 * 3 + 3);
}

INSTANTIATE_TEST_SUITE_P(
    Mlp, FiniteDifference,
    ::testing::Values(FdCase{Activation::kTanh, LossKind::kSoftmaxCrossEntropy},
                      FdCase{Activation::kTanh, LossKind::kMeanSquaredError},
                      FdCase{Activation::kRelu, LossKind::kSoftmaxCrossEntropy},
                      FdCase{Activation::kIdentity, LossKind::kMeanSquaredError}));

TEST(Mlp, InitializationIsDeterministic) {
  Rng a(5), b(5);
  const auto m1 = MlpModel::initialized(MlpSpec{}, a);
  const auto m2 = MlpModel::initialized(MlpSpec{}, b);
  for (std::size_t t = 0; t < m1.params().size(); ++t)
    EXPECT_TRUE(bitwise_equal(m1.params()[t].span(), m2.params()[t].span()));
  for (float v : m1.params()[1]) EXPECT_EQ(v, 0.0f);
  EXPECT_TRUE(m1.is_output_param(3));
  EXPECT_FALSE(m1.is_output_param(1));
}

TEST(Mlp, EvaluateAccuracy) {
  MlpSpec spec;
  spec.sizes = {1, 2};
  MlpModel m(spec);
  m.params()[0] = DenseTensor{-1.0f, 1.0f};  // class 1 when x > 0
  Batch b;
  b.rows = 4;
  b.cols = 1;
  b.inputs = {-2, -1, 1, 2};
  b.labels = {0, 0, 1, 0};
  EXPECT_DOUBLE_EQ(evaluate(m, b).accuracy, 0.75);
}

TEST(Names, RoundTrip) {
  for (auto a : {Activation::kIdentity, Activation::kTanh, Activation::kRelu})
    EXPECT_EQ(parse_activation(to_string(a)), a);
  for (auto l : {LossKind::kSoftmaxCrossEntropy, LossKind::kMeanSquaredError})
    EXPECT_EQ(parse_loss(to_string(l)), l);
  EXPECT_FALSE(parse_loss("hinge").has_value());
}

TEST(Dataset, BlobsShapeAndLabels) {
  BlobsSpec s;
  s.samples = 100;
  s.dim = 8;
  s.classes = 3;
  const auto d = make_blobs(s, 1);
  EXPECT_EQ(d.rows, 100u);
  EXPECT_EQ(d.features.size(), 800u);
  for (int l : d.labels) EXPECT_TRUE(l >= 0 && l < 3);
  const auto again = make_blobs(s, 1);
  EXPECT_EQ(d.features, again.features);
}

TEST(Dataset, CsvParsing) {
  const auto d = parse_csv("a,b,label\n1.5,2,0\n-1,0.25,1\n");
  EXPECT_EQ(d.rows, 2u);
  EXPECT_EQ(d.dim, 2u);
  EXPECT_EQ(d.classes, 2);
  EXPECT_EQ(d.features, (std::vector<float>{1.5f, 2.0f, -1.0f, 0.25f}));
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1}));
  EXPECT_THROW(parse_csv("a,label\n1,x\n"), Error);
  EXPECT_THROW(parse_csv("a,b,label\n1,2\n"), Error);
  EXPECT_THROW(parse_csv(""), Error);
}

TEST(Dataset, GatherRows) {
  const auto d = parse_csv("a,label\n1,0\n2,1\n3,0\n");
  const std::vector<std::uint32_t> rows{2, 0};
  const auto b = d.gather(rows);
  EXPECT_EQ(b.inputs, (std::vector<float>{3, 1}));
  EXPECT_EQ(b.labels, (std::vector<int>{0, 0}));
}

}  // namespace
}  // namespace sparsync
