#include "imbassl/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "imbassl/errors.hpp"
#include "imbassl/losses.hpp"
#include "test_support.hpp"

using namespace imbassl;
using imbassl::ad::Value;
using imbassl::testing::random_vector;
using imbassl::testing::rel_error;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("imbassl_model_test_" + name);
}

}  // namespace

TEST(Init, BiasesAreZero) {
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    const auto m = MlpClassifier::init({2, 3}, seed);
    EXPECT_EQ(m.parameters()[1].data(), (std::vector<double>{0, 0, 0}));
  }
}

TEST(Init, SameSeedSameParameters) {
  const auto a = MlpClassifier::init({8, 32, 32, 7}, 5);
  const auto b = MlpClassifier::init({8, 32, 32, 7}, 5);
  EXPECT_EQ(a.snapshot(), b.snapshot());
  EXPECT_NE(a.snapshot(), MlpClassifier::init({8, 32, 32, 7}, 6).snapshot());
}

TEST(Init, ParameterCount) {
  const std::vector<std::size_t> dims{8, 32, 32, 7};
  std::size_t expected = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) expected += dims[i] * dims[i + 1] + dims[i + 1];
  EXPECT_EQ(expected, 1575u);
  EXPECT_EQ(MlpClassifier::init(dims, 0).parameter_count(), expected);
}

TEST(Init, WeightsWithinGlorotBound) {
  const auto m = MlpClassifier::init({8, 32, 3}, 3);
  const double lim0 = std::sqrt(6.0 / 40.0), lim1 = std::sqrt(6.0 / 35.0);
  for (double w : m.parameters()[0].data()) EXPECT_LE(std::abs(w), lim0);
  for (double w : m.parameters()[2].data()) EXPECT_LE(std::abs(w), lim1);
  EXPECT_EQ(m.parameters()[0].rows(), 32u);
  EXPECT_EQ(m.parameters()[0].cols(), 8u);
}

TEST(Init, InvalidDimsThrow) {
  EXPECT_THROW(MlpClassifier::init({}, 0), ConfigError);
  EXPECT_THROW(MlpClassifier::init({4}, 0), ConfigError);
  EXPECT_THROW(MlpClassifier::init({4, 0, 2}, 0), ConfigError);
}

TEST(PredictProba, ZeroWeightsGiveUniform) {
  auto m = MlpClassifier::init({3, 4, 5}, 1);
  auto snap = m.snapshot();
  for (auto& arr : snap) std::fill(arr.begin(), arr.end(), 0.0);
  m.restore(snap);
  for (double p : m.predict_proba(std::vector<double>{1, -2, 3})) EXPECT_NEAR(p, 0.2, 1e-15);
}

TEST(PredictProba, SumsToOneAndMatchesGraphPath) {
  const auto m = MlpClassifier::init({6, 16, 4}, 2);
  Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_vector(rng, 6, -3, 3);
    const auto p = m.predict_proba(x);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    EXPECT_EQ(p, m.proba(Value::constant(x, 6)).data());
  }
}

TEST(PredictProba, WrongInputSizeThrows) {
  const auto m = MlpClassifier::init({3, 2}, 0);
  EXPECT_THROW(m.predict_proba(std::vector<double>{1, 2}), DimensionError);
  EXPECT_THROW(m.proba(Value::constant({1, 2, 3, 4}, 4)), DimensionError);
}

TEST(PredictProba, CrossEntropyGradientMatchesFiniteDifferences) {
  Rng rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = MlpClassifier::init({4, 6, 3}, trial);
    // Nonzero biases so every parameter is exercised.
    auto snap = m.snapshot();
    for (auto& arr : snap) {
      for (auto& v : arr) v += rng.uniform(-0.2, 0.2);
    }
    m.restore(snap);
    const auto x = random_vector(rng, 4, -2, 2);
    const std::size_t label = rng.below(3);
    ad::backward(cross_entropy(m.proba(Value::constant(x, 4)), label));

    for (std::size_t i = 0; i < snap.size(); ++i) {
      auto f = [&](std::span<const double> p) {
        auto probe = m;
        auto s = snap;
        s[i].assign(p.begin(), p.end());
        probe.restore(s);
        return -std::log(probe.predict_proba(x)[label]);
      };
      EXPECT_LT(rel_error(m.parameters()[i].grad(), ad::finite_diff_grad(f, snap[i], 1e-6)), 1e-4)
          << "parameter " << i;
    }
  }
}

TEST(Copy, IsDeep) {
  const auto a = MlpClassifier::init({2, 2}, 0);
  auto b = a;
  auto snap = b.snapshot();
  snap[0][0] += 1.0;
  b.restore(snap);
  EXPECT_NE(a.snapshot(), b.snapshot());
}

TEST(Restore, RejectsMismatchedShapes) {
  auto m = MlpClassifier::init({2, 3}, 0);
  auto snap = m.snapshot();
  snap.pop_back();
  EXPECT_THROW(m.restore(snap), DimensionError);
  snap = m.snapshot();
  snap[0].push_back(1.0);
  EXPECT_THROW(m.restore(snap), DimensionError);
}

TEST(PredictedClass, Examples) {
  EXPECT_EQ(predicted_class(std::vector<double>{0.1, 0.7, 0.2}), 1u);
  EXPECT_EQ(predicted_class(std::vector<double>{0.5, 0.5}), 0u);
  EXPECT_EQ(predicted_class(std::vector<double>{0.2, 0.4, 0.4}), 1u);
}

TEST(PredictedClass, InvariantUnderLogitRescaling) {
  Rng rng(53);
  for (int trial = 0; trial < 1000; ++trial) {
    auto z = random_vector(rng, 5, -4, 4);
    const auto base = predicted_class(ad::softmax(Value::constant(z, 5)).data());
    const double s = rng.uniform(0.1, 10.0);
    for (auto& v : z) v *= s;
    EXPECT_EQ(predicted_class(ad::softmax(Value::constant(z, 5)).data()), base);
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto m = MlpClassifier::init({8, 32, 32, 3}, 17);
  const auto path = temp_path("roundtrip.ckpt");
  m.save(path);
  const auto loaded = MlpClassifier::load(path);
  EXPECT_EQ(loaded.dims(), m.dims());
  EXPECT_EQ(loaded.seed(), 17u);
  EXPECT_EQ(loaded.snapshot(), m.snapshot());
  std::ifstream in(path);
  std::string magic;
  std::getline(in, magic);
  EXPECT_EQ(magic, kCheckpointMagic);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsForeignAndTruncatedFiles) {
  const auto foreign = temp_path("foreign.ckpt");
  std::ofstream(foreign) << "not a checkpoint\n";
  EXPECT_THROW(MlpClassifier::load(foreign), ConfigError);

  const auto m = MlpClassifier::init({2, 2}, 0);
  const auto full = temp_path("full.ckpt");
  m.save(full);
  std::ifstream in(full);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  const auto truncated = temp_path("truncated.ckpt");
  std::ofstream(truncated) << text.substr(0, text.size() / 2);
  EXPECT_THROW(MlpClassifier::load(truncated), ConfigError);

  EXPECT_THROW(MlpClassifier::load(temp_path("missing.ckpt")), Error);
  for (const auto& p : {foreign, full, truncated}) std::filesystem::remove(p);
}
