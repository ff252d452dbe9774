#include <gtest/gtest.h>

#include <cmath>

#include "amoc/error.hpp"
#include "amoc/metrics.hpp"
#include "amoc/random.hpp"
#include "amoc/serialize.hpp"
#include "amoc/train.hpp"
#include "test_util.hpp"

namespace amoc {
namespace {

// Class c examples use tokens from a class-specific range.
std::vector<Example> separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<ClassId>(rng.index(2));
    Example x;
    for (int t = 0; t < 5; ++t) x.tokens.push_back(static_cast<TokenId>(1 + 10 * c + rng.index(10)));
    x.label = c;
    out.push_back(x);
  }
  return out;
}

TEST(Train, LearnsSeparableData) {
  const ModelDims dims{21, 8, 2, 3};
  const auto data = separable(200, 1);
  TrainConfig tc;
  tc.epochs = 20;
  tc.learning_rate = 0.01;
  const auto result = train(LayerStackModel::initialize(dims, 2), data, tc);
  EXPECT_GT(evaluate_accuracy(result.model, data), 0.95);
  EXPECT_LT(result.loss_trace.back(), result.loss_trace.front());
  EXPECT_EQ(result.loss_trace.size(), 20u * 7u);
}

TEST(Train, SgdAlsoLearns) {
  const ModelDims dims{21, 8, 2, 2};
  const auto data = separable(200, 3);
  TrainConfig tc;
  tc.epochs = 30;
  tc.learning_rate = 0.5;
  tc.optimizer = OptimizerKind::sgd;
  tc.weight_decay = 0.0;
  const auto result = train(LayerStackModel::initialize(dims, 2), data, tc);
  EXPECT_GT(evaluate_accuracy(result.model, data), 0.9);
}

TEST(Train, IsDeterministic) {
  const ModelDims dims{21, 6, 2, 3};
  const auto data = separable(64, 4);
  TrainConfig tc;
  tc.epochs = 2;
  tc.seed = 11;
  const auto a = train(LayerStackModel::initialize(dims, 1), data, tc);
  const auto b = train(LayerStackModel::initialize(dims, 1), data, tc);
  EXPECT_TRUE(a.model == b.model);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
}

TEST(Train, FrozenTensorsStayBitIdentical) {
  const ModelDims dims{21, 6, 2, 4};
  auto m = LayerStackModel::initialize(dims, 5);
  m.freeze_all();
  m.set_frozen(m.weight_index(2), false);
  m.set_frozen(m.head_weight_index(), false);
  const auto before = m;
  TrainConfig tc;
  tc.epochs = 3;
  tc.learning_rate = 0.05;
  const auto after = train(m, separable(64, 6), tc).model;
  for (std::size_t t = 0; t < before.tensor_count(); ++t) {
    const bool same = before.tensor(t).data == after.tensor(t).data;
    EXPECT_EQ(same, before.is_frozen(t)) << before.tensor_name(t);
  }
}

TEST(Train, DivergenceCarriesTheStep) {
  const ModelDims dims{21, 6, 2, 3};
  TrainConfig tc;
  tc.epochs = 50;
  tc.learning_rate = 1e200;
  tc.optimizer = OptimizerKind::sgd;
  try {
    train(LayerStackModel::initialize(dims, 1), separable(64, 7), tc);
    FAIL() << "expected divergence";
  } catch (const TrainingError& e) {
    EXPECT_GE(e.step(), 1u);
    EXPECT_EQ(e.exit_code(), ExitCode::divergence);
  }
}

TEST(Train, RejectsBadConfigAndData) {
  TrainConfig tc;
  tc.learning_rate = 0.0;
  EXPECT_THROW(tc.validate(), InputError);
  tc = {};
  tc.batch_size = 0;
  EXPECT_THROW(tc.validate(), InputError);
  EXPECT_THROW(train(LayerStackModel::initialize({10, 4, 2, 2}, 1), {}, TrainConfig{}), InputError);
}

TEST(Serialize, RoundTripIsBitExact) {
  auto m = LayerStackModel::initialize({50, 6, 3, 4}, 9);
  m.set_frozen(3, true);
  const auto bytes = serialize(m);
  EXPECT_TRUE(deserialize(bytes) == m);
  const auto dir = testing::scratch_dir("serialize");
  save_model(dir / "m.amoc", m);
  EXPECT_TRUE(load_model(dir / "m.amoc") == m);
}

TEST(Serialize, RejectsCorruptInput) {
  const auto bytes = serialize(LayerStackModel::initialize({20, 4, 2, 2}, 1));
  auto bad_magic = bytes;
  bad_magic[0] ^= 0xff;
  EXPECT_THROW(deserialize(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[8] = 99;
  EXPECT_THROW(deserialize(bad_version), FormatError);
  EXPECT_THROW(deserialize(std::span(bytes).first(bytes.size() - 3)), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(deserialize(trailing), FormatError);
  EXPECT_THROW(load_model("/nonexistent/model.amoc"), Error);
}

TEST(Rng, IsDeterministicAndInRange) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(a.index(7), 7u);
    b.index(7);
  }
}

TEST(Rng, NormalHasUnitMoments) {
  Rng r(1);
  double s = 0.0;
  double s2 = 0.0;
  constexpr int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsAPermutation) {
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  Rng r(3);
  r.shuffle(std::span(v));
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_NE(v, sorted);
}

TEST(Rng, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
  EXPECT_EQ(derive_seed(1, "a"), derive_seed(1, "a"));
  EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
}

}  // namespace
}  // namespace amoc
