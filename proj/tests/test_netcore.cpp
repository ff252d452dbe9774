#include <gtest/gtest.h>

#include <cmath>

#include "amoc/error.hpp"
#include "amoc/netcore.hpp"
#include "amoc/random.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace amoc {
namespace {

using testing::random_model;
using testing::max_relative_gradient_error;

// Straight scalar loops over the model definition, no shared code with the
// library forward pass.
std::vector<double> oracle_forward(const LayerStackModel& m, const std::vector<TokenId>& tokens) {
  const std::size_t d = m.dims().width;
  std::vector<double> h(d, 0.0);
  for (auto t : tokens) {
    for (std::size_t i = 0; i < d; ++i) h[i] += m.embedding().at(t, i);
  }
  for (auto& v : h) v /= static_cast<double>(tokens.size());
  std::vector<std::vector<double>> outs;
  for (std::size_t j = 0; j < m.depth(); ++j) {
    std::vector<double> next(d);
    for (std::size_t r = 0; r < d; ++r) {
      double z = m.bias(j).data[r];
      for (std::size_t c = 0; c < d; ++c) z += m.weight(j).at(r, c) * h[c];
      next[r] = h[r] + std::tanh(z);
    }
    h = next;
    outs.push_back(h);
  }
  double amax = -1e300;
  for (double a : m.attention().data) amax = std::max(amax, a);
  std::vector<double> att(m.depth());
  double az = 0.0;
  for (std::size_t j = 0; j < m.depth(); ++j) az += att[j] = std::exp(m.attention().data[j] - amax);
  std::vector<double> r(d, 0.0);
  for (std::size_t j = 0; j < m.depth(); ++j) {
    for (std::size_t i = 0; i < d; ++i) r[i] += att[j] / az * outs[j][i];
  }
  const std::size_t k = m.dims().n_classes;
  std::vector<double> logits(k);
  for (std::size_t c = 0; c < k; ++c) {
    logits[c] = m.head_bias().data[c];
    for (std::size_t i = 0; i < d; ++i) logits[c] += m.head_weight().at(c, i) * r[i];
  }
  double lmax = -1e300;
  for (double l : logits) lmax = std::max(lmax, l);
  double z = 0.0;
  for (auto& l : logits) z += l = std::exp(l - lmax);
  for (auto& l : logits) l /= z;
  return logits;
}

TEST(ProbDist, ValidatesSimplex) {
  EXPECT_NO_THROW(ProbDist({0.2, 0.8}));
  EXPECT_THROW(ProbDist({0.2, 0.7}), InputError);
  EXPECT_THROW(ProbDist({-0.1, 1.1}), InputError);
  EXPECT_THROW(ProbDist(std::vector<double>{}), InputError);
}

TEST(ProbDist, SoftmaxIsShiftInvariantAndStable) {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  const std::vector<double> b = {1001.0, 1002.0, 1003.0};
  const auto pa = ProbDist::softmax(a);
  const auto pb = ProbDist::softmax(b);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(pa[i], pb[i], 1e-15);
  EXPECT_EQ(pa.argmax(), 2u);
}

TEST(ProbDist, ArgmaxTakesLowestIndexOnTies) {
  EXPECT_EQ(ProbDist({0.4, 0.4, 0.2}).argmax(), 0u);
  EXPECT_EQ(ProbDist::uniform(4).argmax(), 0u);
}

TEST(Forward, MatchesScalarOracle) {
  const ModelDims dims{50, 6, 3, 4};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = random_model(dims, seed);
    const auto data = testing::random_examples(20, 50, 3, seed + 100);
    for (const auto& x : data) {
      const auto p = forward(m, x);
      const auto q = oracle_forward(m, x.tokens);
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(p[c], q[c], 1e-13);
    }
  }
}

TEST(Forward, CompressedModelUsesSurvivingLayersOnly) {
  const ModelDims dims{30, 5, 2, 6};
  const auto m = random_model(dims, 9, {1, 4, 6});
  EXPECT_EQ(m.depth(), 3u);
  const Example x{{1, 2, 3}, 0, 1};
  const auto p = forward(m, x);
  const auto q = oracle_forward(m, x.tokens);
  EXPECT_NEAR(p[0], q[0], 1e-13);
}

TEST(Forward, MultiPositionScoresEachToken) {
  const ModelDims dims{30, 5, 2, 3};
  const auto m = random_model(dims, 4);
  const Example x{{3, 7, 9}, std::nullopt, 3};
  const auto all = forward_all(m, x);
  ASSERT_EQ(all.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto q = oracle_forward(m, {x.tokens[i]});
    EXPECT_NEAR(all[i][1], q[1], 1e-13);
  }
  EXPECT_THROW(forward(m, x), InputError);
}

TEST(Forward, RejectsBadExamples) {
  const auto m = random_model({10, 4, 2, 2}, 1);
  EXPECT_THROW(forward(m, Example{{}, 0, 1}), InputError);
  EXPECT_THROW(forward(m, Example{{10}, 0, 1}), InputError);
  EXPECT_THROW(forward(m, Example{{1}, 2, 1}), InputError);
  EXPECT_THROW(forward_all(m, Example{{1, 2}, std::nullopt, 3}), InputError);
}

TEST(Initialize, IsSeedDeterministic) {
  const ModelDims dims{100, 8, 2, 3};
  EXPECT_TRUE(LayerStackModel::initialize(dims, 5) == LayerStackModel::initialize(dims, 5));
  EXPECT_FALSE(LayerStackModel::initialize(dims, 5) == LayerStackModel::initialize(dims, 6));
  const auto m = LayerStackModel::initialize(dims, 5);
  for (double a : m.attention().data) EXPECT_EQ(a, 0.0);
}

TEST(Gradients, FrozenTensorsHaveNoGradient) {
  auto m = random_model({20, 4, 2, 3}, 2);
  m.set_frozen(m.weight_index(1), true);
  m.set_frozen(LayerStackModel::embedding_index(), true);
  const auto data = testing::random_examples(8, 20, 2, 3);
  const auto lg = loss_and_grads(m, data);
  for (std::size_t t = 0; t < m.tensor_count(); ++t) {
    EXPECT_EQ(lg.grads.tensors[t].has_value(), !m.is_frozen(t)) << m.tensor_name(t);
  }
}

TEST(Gradients, RejectsUnusableBatches) {
  const auto m = random_model({20, 4, 2, 3}, 2);
  EXPECT_THROW(loss_and_grads(m, {}), InputError);
  const std::vector<Example> unlabeled = {Example{{1, 2}, std::nullopt, 1}};
  EXPECT_THROW(loss_and_grads(m, unlabeled), InputError);
}

TEST(Gradients, MatchCentralDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) EXPECT_LT(max_relative_gradient_error(seed), 1e-4) << seed;
}

}  // namespace
}  // namespace amoc
