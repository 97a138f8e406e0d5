#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "imbassl/config.hpp"
#include "imbassl/metrics.hpp"
#include "imbassl/model.hpp"
#include "imbassl/trainer.hpp"

namespace imbassl {

// One row of the method table: which supervised loss, which consistency
// loss, and whether the labeled pool is rebalanced before training.
struct MethodSpec {
  std::string_view name;
  SupervisedLoss supervised;
  std::optional<ConsistencyKind> consistency;
  bool resample_labeled;
};

std::span<const MethodSpec> all_methods();
// Throws ConfigError listing the valid names.
const MethodSpec& find_method(std::string_view name);
std::string valid_method_names();

struct PreparedData {
  Dataset labeled;
  Dataset unlabeled;
  Dataset val;
  Dataset test;
};

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed);

struct RunVariant {
  std::string method;
  std::optional<double> gamma;
  std::optional<BlendingMode> blending;
  AugmentStrength strength = AugmentStrength::kWeak;
};

struct SeedRun {
  std::uint64_t seed = 0;
  MlpClassifier model;
  TrainHistory history;
  MetricsReport test;
};

TrainConfig make_train_config(const ExperimentConfig& cfg, const RunVariant& variant, const Dataset& labeled,
                              std::uint64_t seed);

SeedRun run_seed(const ExperimentConfig& cfg, const RunVariant& variant, std::uint64_t seed);

// Every (variant, seed) pair as an independent job on a worker pool.
// Result [v][s] corresponds to variants[v], cfg.seeds[s].
std::vector<std::vector<SeedRun>> run_grid(const ExperimentConfig& cfg, std::span<const RunVariant> variants,
                                           unsigned workers = 0);

struct MetricSummary {
  double uar_mean = 0.0, uar_std = 0.0;
  double g_mean_mean = 0.0, g_mean_std = 0.0;
  double avg_auc_mean = 0.0, avg_auc_std = 0.0;
  std::vector<double> recall_mean;
  std::vector<double> recall_std;
};

MetricSummary summarize(std::span<const SeedRun> runs);

std::string summary_json(std::string_view label, const RunVariant& variant, std::span<const SeedRun> runs);

// Writes summary.json, seed_<s>_history.csv and seed_<s>.ckpt into dir.
void write_run_artifacts(const std::filesystem::path& dir, std::string_view label, const RunVariant& variant,
                         std::span<const SeedRun> runs);

// Command bodies. Each returns the human-readable report printed by the CLI.
std::string cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out);
std::string cmd_compare(const ExperimentConfig& cfg, const std::vector<std::string>& methods,
                        const std::filesystem::path& out);
std::string cmd_sweep_gamma(const ExperimentConfig& cfg, std::vector<double> gammas,
                            const std::vector<BlendingMode>& blendings, const std::filesystem::path& out);
std::string cmd_ablate_aug(const ExperimentConfig& cfg, const std::filesystem::path& out);
std::string cmd_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out,
                         const std::optional<std::filesystem::path>& checkpoint);

}  // namespace imbassl
