#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "imbassl/augment.hpp"
#include "imbassl/losses.hpp"
#include "imbassl/random.hpp"

namespace imbassl {

// N×D feature matrix (row-major) with optional labels. An unlabeled
// dataset has an empty label vector.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t n_features, std::size_t n_classes) : n_features_(n_features), n_classes_(n_classes) {}

  std::size_t size() const { return n_features_ == 0 ? 0 : features_.size() / n_features_; }
  bool empty() const { return size() == 0; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_classes() const { return n_classes_; }
  bool labeled() const { return !labels_.empty() || empty(); }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * n_features_, n_features_};
  }
  std::size_t label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::size_t>& labels() const { return labels_; }
  const std::vector<double>& features() const { return features_; }

  void add_labeled(std::span<const double> x, std::size_t label);
  void add_unlabeled(std::span<const double> x);

  // Same rows with labels removed.
  Dataset without_labels() const;
  Dataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> class_counts() const;

  void save_csv(const std::filesystem::path& path) const;
  // n_classes = 0 infers it from the largest label.
  static Dataset load_csv(const std::filesystem::path& path, std::size_t n_classes = 0);

 private:
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<double> features_;
  std::vector<std::size_t> labels_;
};

struct GaussianMixtureSpec {
  std::vector<double> class_fractions{0.11, 0.67, 0.06, 0.03, 0.11, 0.01, 0.01};
  // C×D; empty selects the default geometry (see default_class_means).
  std::vector<std::vector<double>> means;
  std::size_t dim = 8;
  double cov_scale = 1.0;       // per-class covariance is cov_scale·I
  double mean_distance = 0.0;   // default geometry only; 0 means 2·cov_scale
  std::size_t n_labeled = 300;
  std::size_t n_unlabeled = 3000;
  std::size_t n_val = 600;
  std::size_t n_test = 1200;
  std::uint64_t seed = 0;

  void validate() const;
};

// Class means with all pairwise distances equal to `distance`: scaled unit
// vectors when dim ≥ C, otherwise points on a circle in the first two axes
// with neighbouring distance `distance`.
std::vector<std::vector<double>> default_class_means(std::size_t n_classes, std::size_t dim,
                                                     double distance);

struct MixtureSplits {
  Dataset labeled;
  Dataset unlabeled;
  Dataset val;
  Dataset test;
};

MixtureSplits generate_gaussian_mixture(const GaussianMixtureSpec& spec);

// Per-class proportional allocation with largest-remainder rounding. Returns
// one dataset per ratio, in the same order.
std::vector<Dataset> stratified_split(const Dataset& data, std::span<const double> ratios,
                                      std::uint64_t seed);

struct LabeledUnlabeled {
  Dataset labeled;
  Dataset unlabeled;
};

// Keeps labels on a stratified `labeled_fraction` of `train`.
LabeledUnlabeled split_labeled(const Dataset& train, double labeled_fraction, std::uint64_t seed);

ClassFrequencyTable class_frequencies(std::span<const std::size_t> labels, std::size_t n_classes);

struct Batch {
  std::vector<std::vector<double>> labeled_x;
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> unlabeled_x;
  std::vector<std::vector<double>> augmented_x;
};

struct BatchConfig {
  std::size_t n_labeled = 8;
  std::size_t n_unlabeled = 22;
  // Perturbation for the augmented copy of each unlabeled sample.
  double unlabeled_sigma = 0.0;
  // Perturbation applied to labeled samples; 0 disables it.
  double labeled_sigma = 0.0;
};

// Draws batches by walking a fresh permutation of each pool per pass, so no
// sample repeats within a pass. The two pools cycle independently.
class BatchComposer {
 public:
  BatchComposer(const Dataset& labeled_pool, const Dataset& unlabeled_pool, BatchConfig config,
                std::uint64_t batching_seed, std::uint64_t augment_seed);

  Batch compose_batch();
  // ⌈n_labeled_pool / batch_labeled⌉
  std::size_t steps_per_epoch() const;

 private:
  std::size_t next_index(std::vector<std::size_t>& order, std::size_t& cursor);

  const Dataset& labeled_;
  const Dataset& unlabeled_;
  BatchConfig config_;
  Rng batch_rng_;
  Rng augment_rng_;
  std::vector<std::size_t> labeled_order_;
  std::vector<std::size_t> unlabeled_order_;
  std::size_t labeled_cursor_ = 0;
  std::size_t unlabeled_cursor_ = 0;
};

// Appends SMOTE samples until each class reaches its target count.
// Classes already at or above the target are left alone.
Dataset smote_oversample(const Dataset& data, std::span<const std::size_t> target_count_per_class,
                         std::size_t k_neighbors, Rng& rng);

// Uniform per-class subsample without replacement; original order kept.
Dataset random_undersample(const Dataset& data, std::span<const std::size_t> target_count_per_class,
                           Rng& rng);

// SMOTE every class up to the median class count, then undersample the
// largest class down to it.
Dataset sampling_baseline(const Dataset& data, std::size_t k_neighbors, Rng& rng);

// Sample standard deviation of features around each sample's class mean,
// pooled over classes and dimensions.
double within_class_std(const Dataset& data);

}  // namespace imbassl
