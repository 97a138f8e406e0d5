#include "imbassl/data.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "imbassl/errors.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace imbassl;
using imbassl::testing::random_vector;

namespace {

Dataset labeled_set(std::size_t d, std::size_t c, const std::vector<std::size_t>& counts, Rng& rng) {
  Dataset out(d, c);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (std::size_t i = 0; i < counts[k]; ++i) out.add_labeled(random_vector(rng, d, -5, 5), k);
  }
  return out;
}

std::multiset<std::vector<double>> rows_of(const Dataset& d) {
  std::multiset<std::vector<double>> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto r = d.row(i);
    out.emplace(r.begin(), r.end());
  }
  return out;
}

const std::vector<std::size_t> kHamCounts{1113, 6705, 514, 327, 1099, 115, 142};

}  // namespace

TEST(Dataset, AddAndGuards) {
  Dataset d(2, 3);
  d.add_labeled(std::vector<double>{1, 2}, 2);
  EXPECT_EQ(d.size(), 1u);
  EXPECT_THROW(d.add_labeled(std::vector<double>{1}, 0), DimensionError);
  EXPECT_THROW(d.add_labeled(std::vector<double>{1, 2}, 3), ContractError);
  EXPECT_THROW(d.add_unlabeled(std::vector<double>{1, 2}), ContractError);
  const auto u = d.without_labels();
  EXPECT_FALSE(u.labeled());
  EXPECT_EQ(u.size(), 1u);
}

TEST(Dataset, CsvRoundTripIsExact) {
  Rng rng(71);
  const auto d = labeled_set(3, 2, {5, 4}, rng);
  const auto path = std::filesystem::temp_directory_path() / "imbassl_data_test.csv";
  d.save_csv(path);
  const auto back = Dataset::load_csv(path, 2);
  EXPECT_EQ(back.features(), d.features());
  EXPECT_EQ(back.labels(), d.labels());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "f0,f1,f2,label");

  d.without_labels().save_csv(path);
  const auto unl = Dataset::load_csv(path, 2);
  EXPECT_FALSE(unl.labeled());
  EXPECT_EQ(unl.features(), d.features());

  std::ofstream(path) << "a,b\n1,2\n";
  EXPECT_THROW(Dataset::load_csv(path), ConfigError);
  std::ofstream(path) << "f0,label\nxyz,0\n";
  EXPECT_THROW(Dataset::load_csv(path), ConfigError);
  std::filesystem::remove(path);
}

TEST(Mixture, BalancedCountsConcentrate) {
  GaussianMixtureSpec spec;
  spec.class_fractions = {0.5, 0.5};
  spec.n_test = 10000;
  spec.seed = 3;
  const auto splits = generate_gaussian_mixture(spec);
  const auto counts = splits.test.class_counts();
  EXPECT_NEAR(static_cast<double>(counts[0]), 5000.0, 3 * std::sqrt(10000 * 0.25));
}

TEST(Mixture, DeterministicUnderSeed) {
  GaussianMixtureSpec spec;
  spec.seed = 9;
  const auto a = generate_gaussian_mixture(spec), b = generate_gaussian_mixture(spec);
  EXPECT_EQ(a.labeled.features(), b.labeled.features());
  EXPECT_EQ(a.unlabeled.features(), b.unlabeled.features());
  EXPECT_EQ(a.test.labels(), b.test.labels());
  spec.seed = 10;
  EXPECT_NE(generate_gaussian_mixture(spec).labeled.features(), a.labeled.features());
}

TEST(Mixture, SplitShapesAndRepresentation) {
  GaussianMixtureSpec spec;  // seven classes, the rarest at 1%
  spec.n_labeled = 30;
  spec.n_val = 20;
  spec.n_test = 20;
  spec.n_unlabeled = 50;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    spec.seed = seed;
    const auto s = generate_gaussian_mixture(spec);
    EXPECT_EQ(s.labeled.size(), 30u);
    EXPECT_EQ(s.unlabeled.size(), 50u);
    EXPECT_FALSE(s.unlabeled.labeled());
    for (const auto* d : {&s.labeled, &s.val, &s.test}) {
      for (auto n : d->class_counts()) EXPECT_GE(n, 1u);
    }
  }
}

TEST(Mixture, InvalidFractionsRejected) {
  GaussianMixtureSpec spec;
  spec.class_fractions = {1.0, 0.0};
  EXPECT_THROW(generate_gaussian_mixture(spec), ConfigError);
  spec.class_fractions = {0.6, 0.6};
  EXPECT_THROW(generate_gaussian_mixture(spec), ConfigError);
  spec.class_fractions = {0.5, 0.5};
  spec.cov_scale = 0.0;
  EXPECT_THROW(generate_gaussian_mixture(spec), ConfigError);
}

TEST(Mixture, DefaultMeansAreEquidistant) {
  for (auto [c, dim] : {std::pair<std::size_t, std::size_t>{3, 8}, {7, 8}, {3, 2}}) {
    const auto m = default_class_means(c, dim, 2.5);
    for (std::size_t a = 0; a < c; ++a) {
      for (std::size_t b = a + 1; b < c; ++b) {
        double d = 0.0;
        for (std::size_t j = 0; j < dim; ++j) d += (m[a][j] - m[b][j]) * (m[a][j] - m[b][j]);
        if (dim >= c || b == a + 1) {
          EXPECT_NEAR(std::sqrt(d), 2.5, 1e-12);
        }
      }
    }
  }
}

TEST(Mixture, FeatureSpreadMatchesCovScale) {
  GaussianMixtureSpec spec;
  spec.class_fractions = {0.5, 0.5};
  spec.cov_scale = 4.0;
  spec.n_test = 20000;
  const auto s = generate_gaussian_mixture(spec);
  EXPECT_NEAR(within_class_std(s.test), 2.0, 0.02);
}

TEST(Stratified, SingleClassExactSplit) {
  Rng rng(72);
  const auto d = labeled_set(2, 1, {100}, rng);
  const std::vector<double> ratios{0.7, 0.2, 0.1};
  const auto parts = stratified_split(d, ratios, 1);
  EXPECT_EQ(parts[0].size(), 70u);
  EXPECT_EQ(parts[1].size(), 20u);
  EXPECT_EQ(parts[2].size(), 10u);
}

TEST(Stratified, PreservesClassFractionsAndPartitions) {
  Rng rng(73);
  const auto d = labeled_set(2, 7, kHamCounts, rng);
  const std::vector<double> ratios{0.7, 0.2, 0.1};
  const auto parts = stratified_split(d, ratios, 5);
  std::size_t min_size = d.size();
  for (const auto& p : parts) min_size = std::min(min_size, p.size());
  const auto global = class_frequencies(d.labels(), 7);
  auto all = rows_of(parts[0]);
  for (const auto& p : parts) {
    const auto f = class_frequencies(p.labels(), 7);
    for (std::size_t c = 0; c < 7; ++c) EXPECT_LE(std::abs(f[c] - global[c]), 1.0 / static_cast<double>(min_size));
  }
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto r = rows_of(parts[i]);
    all.insert(r.begin(), r.end());
  }
  EXPECT_EQ(all, rows_of(d));

  const auto again = stratified_split(d, ratios, 5);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(again[i].features(), parts[i].features());
}

TEST(Stratified, RejectsBadRatios) {
  Rng rng(74);
  const auto d = labeled_set(2, 2, {10, 10}, rng);
  EXPECT_THROW(stratified_split(d, std::vector<double>{0.5, 0.4}, 0), ConfigError);
  EXPECT_THROW(stratified_split(d.without_labels(), std::vector<double>{1.0}, 0), ContractError);
}

TEST(SplitLabeled, KeepsStratifiedFraction) {
  Rng rng(75);
  const auto d = labeled_set(2, 2, {90, 10}, rng);
  const auto s = split_labeled(d, 0.1, 3);
  EXPECT_EQ(s.labeled.size(), 10u);
  EXPECT_EQ(s.labeled.class_counts(), (std::vector<std::size_t>{9, 1}));
  EXPECT_EQ(s.unlabeled.size(), 90u);
  EXPECT_FALSE(s.unlabeled.labeled());
  EXPECT_THROW(split_labeled(d, 0.0, 3), ConfigError);
}

TEST(ClassFrequencies, Examples) {
  const std::vector<std::size_t> labels{0, 0, 1, 1};
  EXPECT_EQ(class_frequencies(labels, 2).freqs(), (std::vector<double>{0.5, 0.5}));
  EXPECT_THROW(class_frequencies(std::vector<std::size_t>{}, 2), ContractError);
  EXPECT_THROW(class_frequencies(std::vector<std::size_t>{3}, 2), ContractError);
}

TEST(ClassFrequencies, PublishedDatasetRow) {
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < kHamCounts.size(); ++c) labels.insert(labels.end(), kHamCounts[c], c);
  const auto t = class_frequencies(labels, 7);
  const std::vector<double> expected{0.111, 0.669, 0.051, 0.033, 0.110, 0.011, 0.014};
  double total = 0.0;
  for (std::size_t c = 0; c < 7; ++c) {
    EXPECT_NEAR(t[c], expected[c], 5e-4);
    total += t[c];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Batch, DefaultSizes) {
  Rng rng(76);
  const auto lab = labeled_set(4, 2, {20, 20}, rng);
  const auto unl = labeled_set(4, 2, {50, 50}, rng).without_labels();
  BatchConfig cfg;
  cfg.unlabeled_sigma = 0.1;
  BatchComposer composer(lab, unl, cfg, 1, 2);
  const auto b = composer.compose_batch();
  EXPECT_EQ(b.labeled_x.size(), 8u);
  EXPECT_EQ(b.labels.size(), 8u);
  EXPECT_EQ(b.unlabeled_x.size(), 22u);
  EXPECT_EQ(b.augmented_x.size(), 22u);
  for (std::size_t i = 0; i < 22; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NE(b.unlabeled_x[i][j], b.augmented_x[i][j]);
  }
  EXPECT_EQ(composer.steps_per_epoch(), 5u);
}

TEST(Batch, ZeroSigmaGivesIdenticalPairs) {
  Rng rng(77);
  const auto lab = labeled_set(3, 2, {5, 5}, rng);
  const auto unl = labeled_set(3, 2, {30, 30}, rng).without_labels();
  BatchComposer composer(lab, unl, BatchConfig{}, 1, 2);
  const auto b = composer.compose_batch();
  EXPECT_EQ(b.unlabeled_x, b.augmented_x);
}

TEST(Batch, NoDuplicatesWithinAPass) {
  Rng rng(78);
  const auto lab = labeled_set(2, 2, {8, 8}, rng);
  const auto unl = labeled_set(2, 2, {22, 22}, rng).without_labels();
  BatchComposer composer(lab, unl, BatchConfig{}, 3, 4);
  std::multiset<std::vector<double>> seen_l, seen_u;
  for (int i = 0; i < 2; ++i) {
    const auto b = composer.compose_batch();
    seen_l.insert(b.labeled_x.begin(), b.labeled_x.end());
    seen_u.insert(b.unlabeled_x.begin(), b.unlabeled_x.end());
  }
  EXPECT_EQ(seen_l, rows_of(lab));
  EXPECT_EQ(seen_u, rows_of(unl));
}

TEST(Batch, DrawsOnlyFromTheGivenPools) {
  Rng rng(79);
  const auto lab = labeled_set(2, 2, {6, 7}, rng);
  const auto unl = labeled_set(2, 2, {9, 4}, rng).without_labels();
  const auto lab_rows = rows_of(lab), unl_rows = rows_of(unl);
  BatchComposer composer(lab, unl, BatchConfig{}, 5, 6);
  for (int i = 0; i < 20; ++i) {
    const auto b = composer.compose_batch();
    for (const auto& x : b.labeled_x) EXPECT_TRUE(lab_rows.count(x));
    for (const auto& x : b.unlabeled_x) EXPECT_TRUE(unl_rows.count(x));
  }
}

TEST(Batch, EmptyPoolsThrow) {
  Rng rng(80);
  const auto lab = labeled_set(2, 2, {3, 3}, rng);
  const Dataset empty_unl(2, 2);
  EXPECT_THROW(BatchComposer(lab, empty_unl, BatchConfig{}, 0, 0), ContractError);
  EXPECT_THROW(BatchComposer(Dataset(2, 2), lab.without_labels(), BatchConfig{}, 0, 0), ContractError);
}

TEST(Smote, TwoPointClassLiesOnSegment) {
  Dataset d(2, 2);
  for (int i = 0; i < 10; ++i) d.add_labeled(std::vector<double>{5.0 + i, 5.0}, 0);
  d.add_labeled(std::vector<double>{0, 0}, 1);
  d.add_labeled(std::vector<double>{2, 4}, 1);
  Rng rng(81);
  const std::vector<std::size_t> targets{10, 10};
  const auto out = smote_oversample(d, targets, 5, rng);
  EXPECT_EQ(out.class_counts(), (std::vector<std::size_t>{10, 10}));
  for (std::size_t i = d.size(); i < out.size(); ++i) {
    EXPECT_EQ(out.label(i), 1u);
    const auto r = out.row(i);
    EXPECT_NEAR(r[1], 2 * r[0], 1e-12);
    EXPECT_GE(r[0], 0.0);
    EXPECT_LE(r[0], 2.0);
  }
  // Originals are kept as a prefix.
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_TRUE(std::equal(d.row(i).begin(), d.row(i).end(), out.row(i).begin()));
  }
}

TEST(Smote, SyntheticPointsAreNeighbourInterpolations) {
  Rng data_rng(82);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t minority = 3 + data_rng.below(10);
    const auto d = labeled_set(3, 2, {30, minority}, data_rng);
    std::vector<std::vector<double>> points;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.label(i) == 1) points.emplace_back(d.row(i).begin(), d.row(i).end());
    }
    Rng rng(trial);
    const std::vector<std::size_t> targets{30, 30};
    const auto out = smote_oversample(d, targets, 5, rng);
    std::vector<double> lo(3, 1e300), hi(3, -1e300);
    for (const auto& p : points) {
      for (std::size_t j = 0; j < 3; ++j) {
        lo[j] = std::min(lo[j], p[j]);
        hi[j] = std::max(hi[j], p[j]);
      }
    }
    for (std::size_t i = d.size(); i < out.size(); ++i) {
      ASSERT_EQ(out.label(i), 1u);
      EXPECT_TRUE(oracle::smote_reconstructs(out.row(i), points, 5, 1e-9));
      for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_GE(out.row(i)[j], lo[j] - 1e-12);
        EXPECT_LE(out.row(i)[j], hi[j] + 1e-12);
      }
    }
  }
}

TEST(Smote, SingleSampleIsDuplicated) {
  Dataset d(2, 2);
  d.add_labeled(std::vector<double>{0, 0}, 0);
  d.add_labeled(std::vector<double>{1, 0}, 0);
  d.add_labeled(std::vector<double>{7, 8}, 1);
  Rng rng(83);
  const std::vector<std::size_t> targets{2, 3};
  const auto out = smote_oversample(d, targets, 5, rng);
  ASSERT_EQ(out.size(), 5u);
  for (std::size_t i = 3; i < 5; ++i) EXPECT_EQ(out.row(i)[0], 7.0);
  EXPECT_THROW(smote_oversample(d, targets, 0, rng), ContractError);
}

TEST(Undersample, ExactCountsAndDeterminism) {
  Rng data_rng(84);
  const auto d = labeled_set(2, 3, {40, 12, 5}, data_rng);
  const std::vector<std::size_t> targets{10, 12, 5};
  Rng r1(1), r2(1);
  const auto a = random_undersample(d, targets, r1);
  const auto b = random_undersample(d, targets, r2);
  EXPECT_EQ(a.class_counts(), targets);
  EXPECT_EQ(a.features(), b.features());

  Rng r3(2);
  const auto same = random_undersample(d, d.class_counts(), r3);
  EXPECT_EQ(rows_of(same), rows_of(d));

  const std::vector<std::size_t> too_many{41, 12, 5};
  EXPECT_THROW(random_undersample(d, too_many, r3), ContractError);
}

TEST(SamplingBaseline, BalancesToMedian) {
  Rng data_rng(85);
  const auto d = labeled_set(2, 3, {50, 10, 4}, data_rng);
  Rng rng(3);
  EXPECT_EQ(sampling_baseline(d, 5, rng).class_counts(), (std::vector<std::size_t>{10, 10, 10}));
}

TEST(WithinClassStd, PooledSampleDeviation) {
  Dataset d(1, 2);
  for (double v : {0.0, 2.0}) d.add_labeled(std::vector<double>{v}, 0);
  for (double v : {10.0, 14.0}) d.add_labeled(std::vector<double>{v}, 1);
  EXPECT_NEAR(within_class_std(d), std::sqrt(5.0), 1e-15);
}
