#include "imbassl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "imbassl/errors.hpp"
#include "imbassl/log.hpp"
#include "imbassl/random.hpp"

namespace imbassl {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0,1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (batch_labeled == 0) throw ConfigError("batch_labeled must be > 0");
  if (consistency && batch_unlabeled == 0) throw ConfigError("batch_unlabeled must be > 0 with a consistency loss");
  if (!(focal_gamma >= 0.0)) throw ConfigError("focal_gamma must be >= 0");
  if (!(unlabeled_sigma >= 0.0) || !(labeled_sigma >= 0.0)) throw ConfigError("noise sigmas must be >= 0");
  if (consistency) consistency->validate();
}

OptimizerState OptimizerState::zeros_like(std::span<const ad::Value> params) {
  OptimizerState state;
  for (const auto& p : params) state.velocity.emplace_back(p.size(), 0.0);
  return state;
}

void sgd_update(std::span<double> param, std::span<const double> grad, std::span<double> velocity,
                double lr, double momentum, double weight_decay) {
  if (param.size() != grad.size() || param.size() != velocity.size()) {
    throw DimensionError("sgd_update: parameter/gradient/velocity size mismatch");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i] + weight_decay * param[i];
    velocity[i] = momentum * velocity[i] + g;
    param[i] -= lr * velocity[i];
  }
}

void sgd_step(std::span<ad::Value> params, OptimizerState& state, const TrainConfig& cfg) {
  if (state.velocity.size() != params.size()) throw DimensionError("optimizer state does not match parameters");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& g = params[k].grad();
    for (double v : g) {
      if (!std::isfinite(v)) {
        throw DivergenceError("non-finite gradient in parameter array " + std::to_string(k));
      }
    }
    sgd_update(params[k].mutable_data(), g, state.velocity[k], cfg.lr, cfg.momentum, cfg.weight_decay);
  }
}

namespace {

ad::Value supervised_term(const ad::Value& p, std::size_t label, const ClassFrequencyTable& table,
                          const TrainConfig& cfg) {
  switch (cfg.supervised_loss) {
    case SupervisedLoss::kCe: return cross_entropy(p, label);
    case SupervisedLoss::kWeightedCe: return weighted_ce(p, label, table);
    case SupervisedLoss::kFocal: return focal_loss(p, label, cfg.focal_gamma);
  }
  throw ContractError("unknown supervised loss");
}

ad::Value as_input(const std::vector<double>& x) { return ad::Value::constant(x, x.size()); }

}  // namespace

BatchLoss batch_loss(const MlpClassifier& model, const Batch& batch, const ClassFrequencyTable& table,
                     const TrainConfig& cfg) {
  if (batch.labeled_x.empty()) throw ContractError("batch has no labeled samples");
  std::vector<ad::Value> sup;
  sup.reserve(batch.labeled_x.size());
  for (std::size_t i = 0; i < batch.labeled_x.size(); ++i) {
    sup.push_back(supervised_term(model.proba(as_input(batch.labeled_x[i])), batch.labels[i], table, cfg));
  }
  BatchLoss out;
  const auto sup_mean = ad::mean(sup);
  out.supervised = sup_mean.item();
  out.total = sup_mean;
  if (!cfg.consistency || batch.unlabeled_x.empty()) return out;

  std::vector<ad::Value> cons;
  cons.reserve(batch.unlabeled_x.size());
  for (std::size_t i = 0; i < batch.unlabeled_x.size(); ++i) {
    const auto z = model.proba(as_input(batch.unlabeled_x[i]));
    const auto z_hat = model.proba(as_input(batch.augmented_x[i]));
    cons.push_back(consistency_loss(z, z_hat, table, *cfg.consistency));
  }
  const auto cons_mean = ad::mean(cons);
  out.consistency = cons_mean.item();
  out.total = ad::add(sup_mean, ad::scale(cons_mean, cfg.consistency->unsup_weight));
  return out;
}

StepLosses train_step(MlpClassifier& model, const Batch& batch, const ClassFrequencyTable& table,
                      const TrainConfig& cfg, OptimizerState& state) {
  auto loss = batch_loss(model, batch, table, cfg);
  const double total = loss.total.item();
  if (!std::isfinite(total) || total > cfg.divergence_bound) {
    throw DivergenceError("training loss diverged (" + std::to_string(total) + ")");
  }
  ad::zero_grad(model.parameters());
  ad::backward(loss.total);
  sgd_step(model.parameters(), state, cfg);
  return {loss.supervised, loss.consistency};
}

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out << "epoch,sup_loss,cons_loss,val_uar,val_gmean,val_avg_auc\n";
  char buf[160];
  for (const auto& r : epochs) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.sup_loss, r.cons_loss,
                  r.val.uar, r.val.g_mean, r.val.avg_auc);
    out << buf;
  }
  return out.str();
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_csv();
}

TrainResult train(std::vector<std::size_t> dims, const TrainConfig& cfg, const TrainData& data,
                  std::optional<ClassFrequencyTable> table) {
  cfg.validate();
  if (data.labeled.empty() || data.val.empty()) throw ContractError("training needs non-empty labeled and val splits");
  if (dims.front() != data.labeled.n_features()) throw DimensionError("model input dim does not match the data");
  if (dims.back() != data.labeled.n_classes()) throw DimensionError("model output dim does not match the class count");
  if (!table) table = class_frequencies(data.labeled.labels(), data.labeled.n_classes());

  auto model = MlpClassifier::init(std::move(dims), derive_seed(cfg.seed, SeedStream::kInit));
  TrainResult result{model, {}};
  if (cfg.epochs == 0) return result;

  // Supervised-only runs may omit the unlabeled pool entirely.
  const std::size_t n_unlabeled = cfg.consistency || !data.unlabeled.empty() ? cfg.batch_unlabeled : 0;
  BatchConfig batch_cfg{cfg.batch_labeled, n_unlabeled, cfg.unlabeled_sigma, cfg.labeled_sigma};
  BatchComposer composer(data.labeled, data.unlabeled, batch_cfg, derive_seed(cfg.seed, SeedStream::kBatching),
                         derive_seed(cfg.seed, SeedStream::kAugment));
  auto state = OptimizerState::zeros_like(model.parameters());
  const std::size_t steps = composer.steps_per_epoch();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    try {
      for (std::size_t s = 0; s < steps; ++s) {
        const auto losses = train_step(model, composer.compose_batch(), *table, cfg, state);
        record.sup_loss += losses.supervised;
        record.cons_loss += losses.consistency;
      }
    } catch (const Error& e) {
      // Runaway parameters surface either through the loss guard or as
      // non-finite logits.
      if (!dynamic_cast<const DivergenceError*>(&e) && !dynamic_cast<const NumericInputError*>(&e)) throw;
      result.history.failed = true;
      result.history.failure = "epoch " + std::to_string(epoch) + ": " + e.what();
      log_warning("training diverged at " + result.history.failure);
      return result;
    }
    record.sup_loss /= static_cast<double>(steps);
    record.cons_loss /= static_cast<double>(steps);
    record.val = evaluate(model, data.val);
    if (!result.history.best_epoch || record.val.uar > result.history.best_val_uar) {
      result.history.best_epoch = epoch;
      result.history.best_val_uar = record.val.uar;
      result.best_model = model;
    }
    result.history.epochs.push_back(std::move(record));
  }
  return result;
}

}  // namespace imbassl
