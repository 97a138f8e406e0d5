#pragma once

// Experiment configuration: line-oriented `key = value` pairs under
// `[section]` headers. `#` starts a comment, lists are comma-separated and
// booleans are true/false.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imbassl/data.hpp"
#include "imbassl/trainer.hpp"

namespace imbassl {

class ConfigFile {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
    mutable bool used = false;
  };

  static ConfigFile parse(const std::string& text, const std::string& origin = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get_string(const std::string& section, const std::string& key) const;
  std::optional<double> get_double(const std::string& section, const std::string& key) const;
  std::optional<std::uint64_t> get_uint(const std::string& section, const std::string& key) const;
  std::optional<bool> get_bool(const std::string& section, const std::string& key) const;
  std::optional<std::vector<double>> get_doubles(const std::string& section, const std::string& key) const;
  std::optional<std::vector<std::uint64_t>> get_uints(const std::string& section, const std::string& key) const;

  // Throws ConfigError naming the first key no getter asked for.
  void reject_unused() const;

 private:
  const Entry* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const Entry& e, const std::string& section, const std::string& key,
                         const std::string& why) const;

  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

std::vector<double> parse_double_list(const std::string& text);
std::vector<std::uint64_t> parse_uint_list(const std::string& text);

enum class DatasetSource { kGaussian, kCsv };

struct DatasetConfig {
  DatasetSource source = DatasetSource::kGaussian;
  GaussianMixtureSpec gaussian;
  // Gaussian source: a fixed generator seed shared by all runs. Without
  // it every run seed generates its own dataset.
  std::optional<std::uint64_t> fixed_seed;
  std::filesystem::path csv_path;
  // CSV source: stratified 70/20/10 train/test/val, then this fraction of
  // train keeps its labels.
  double labeled_fraction = 0.1;
};

enum class AugmentStrength { kWeak, kStrong };

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<std::size_t> hidden{32, 32};
  // Consistency settings in `train.consistency` are overridden by `method`.
  TrainConfig train;
  ConsistencyConfig consistency;
  // Unlabeled perturbation sigma; absent means noise_scale × within-class std.
  std::optional<double> noise_sigma;
  double noise_scale = 0.3;
  double strong_factor = 3.0;
  bool augment_labeled = true;
  std::size_t smote_k = 5;
  std::string method = "uda-abcl";
  std::vector<std::uint64_t> seeds{0};
};

ExperimentConfig parse_experiment_config(const ConfigFile& file);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace imbassl
