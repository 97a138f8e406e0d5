#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imbassl/data.hpp"
#include "imbassl/losses.hpp"
#include "imbassl/metrics.hpp"
#include "imbassl/model.hpp"

namespace imbassl {

enum class SupervisedLoss { kCe, kWeightedCe, kFocal };

struct TrainConfig {
  std::size_t epochs = 200;
  double lr = 1e-4;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_labeled = 8;
  std::size_t batch_unlabeled = 22;
  SupervisedLoss supervised_loss = SupervisedLoss::kCe;
  double focal_gamma = 1.0;
  // Absent means supervised-only training.
  std::optional<ConsistencyConfig> consistency;
  // Gaussian perturbation producing the augmented copy of unlabeled samples.
  double unlabeled_sigma = 0.0;
  // Same weak perturbation applied to labeled samples; 0 disables it.
  double labeled_sigma = 0.0;
  double divergence_bound = 1e6;
  std::uint64_t seed = 0;

  void validate() const;
};

// Momentum buffers, one per parameter array.
struct OptimizerState {
  std::vector<std::vector<double>> velocity;

  static OptimizerState zeros_like(std::span<const ad::Value> params);
};

// g' = grad + wd·param; v ← momentum·v + g'; param ← param − lr·v
void sgd_update(std::span<double> param, std::span<const double> grad, std::span<double> velocity,
                double lr, double momentum, double weight_decay);

// Applies sgd_update to every parameter using its accumulated grad.
// Throws DivergenceError on a non-finite gradient.
void sgd_step(std::span<ad::Value> params, OptimizerState& state, const TrainConfig& cfg);

struct BatchLoss {
  ad::Value total;
  double supervised = 0.0;
  double consistency = 0.0;
};

// mean supervised loss + unsup_weight · mean consistency loss, as a graph.
BatchLoss batch_loss(const MlpClassifier& model, const Batch& batch, const ClassFrequencyTable& table,
                     const TrainConfig& cfg);

struct StepLosses {
  double supervised = 0.0;
  double consistency = 0.0;
};

// One backward pass and one optimizer step.
StepLosses train_step(MlpClassifier& model, const Batch& batch, const ClassFrequencyTable& table,
                      const TrainConfig& cfg, OptimizerState& state);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double sup_loss = 0.0;
  double cons_loss = 0.0;
  MetricsReport val;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> best_epoch;
  double best_val_uar = 0.0;
  bool failed = false;
  std::string failure;

  void write_csv(const std::filesystem::path& path) const;
  std::string to_csv() const;
};

struct TrainData {
  const Dataset& labeled;
  const Dataset& unlabeled;
  const Dataset& val;
};

struct TrainResult {
  MlpClassifier best_model;
  TrainHistory history;
};

// Full run; keeps the parameters of the epoch with the best validation UAR
// (earliest on ties). `table` defaults to the labeled pool's frequencies.
TrainResult train(std::vector<std::size_t> dims, const TrainConfig& cfg, const TrainData& data,
                  std::optional<ClassFrequencyTable> table = std::nullopt);

}  // namespace imbassl
