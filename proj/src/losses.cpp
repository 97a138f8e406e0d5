#include "imbassl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "imbassl/errors.hpp"
#include "imbassl/model.hpp"

namespace imbassl {

namespace {

void check_label(const ad::Value& p, std::size_t label) {
  if (label >= p.size()) {
    throw ContractError("label " + std::to_string(label) + " out of range for " +
                        std::to_string(p.size()) + " classes");
  }
}

}  // namespace

ClassFrequencyTable::ClassFrequencyTable(std::vector<double> freqs) : freqs_(std::move(freqs)) {
  if (freqs_.empty()) throw ConfigError("class frequency table is empty");
  double total = 0.0;
  for (double f : freqs_) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("class frequency outside [0,1]");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("class frequencies sum to " + std::to_string(total) + ", expected 1");
  }
}

double ClassFrequencyTable::min() const { return *std::min_element(freqs_.begin(), freqs_.end()); }
double ClassFrequencyTable::max() const { return *std::max_element(freqs_.begin(), freqs_.end()); }

void ConsistencyConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0,1]");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must be in (0,1]");
  if (!(unsup_weight >= 0.0)) throw ConfigError("unsup_weight must be >= 0");
}

std::string_view to_string(ConsistencyKind kind) {
  switch (kind) {
    case ConsistencyKind::kCl: return "cl";
    case ConsistencyKind::kScl: return "scl";
    case ConsistencyKind::kAbcl: return "abcl";
  }
  return "?";
}

std::string_view to_string(BlendingMode mode) {
  return mode == BlendingMode::kAlwaysOn ? "always" : "selective";
}

BlendingMode parse_blending(std::string_view text) {
  if (text == "always") return BlendingMode::kAlwaysOn;
  if (text == "selective") return BlendingMode::kSelective;
  throw ConfigError("unknown blending mode '" + std::string(text) + "' (expected always|selective)");
}

ad::Value cross_entropy(const ad::Value& p, std::size_t label) {
  check_label(p, label);
  return ad::scale(ad::log_floor(ad::pick(p, label)), -1.0);
}

ad::Value weighted_ce(const ad::Value& p, std::size_t label, const ClassFrequencyTable& table) {
  check_label(p, label);
  if (table.n_classes() != p.size()) throw DimensionError("frequency table / class count mismatch");
  return ad::scale(cross_entropy(p, label), 1.0 - table[label]);
}

ad::Value focal_loss(const ad::Value& p, std::size_t label, double gamma_f) {
  check_label(p, label);
  if (!(gamma_f >= 0.0)) throw ContractError("focal gamma must be >= 0");
  const auto pl = ad::pick(p, label);
  const auto modulating = ad::pow(ad::add_scalar(ad::scale(pl, -1.0), 1.0), gamma_f);
  return ad::scale(ad::mul(modulating, ad::log_floor(pl)), -1.0);
}

ad::Value consistency_cl(const ad::Value& z, const ad::Value& z_hat) {
  return ad::kl_div(ad::stop_gradient(z), z_hat);
}

double scl_weight(const ClassFrequencyTable& table, std::size_t c, double beta) {
  const double lo = table.min();
  const double hi = table.max();
  if (hi <= lo) return 1.0;
  return beta + (1.0 - beta) * (table[c] - lo) / (hi - lo);
}

ad::Value consistency_scl(const ad::Value& z, const ad::Value& z_hat,
                          const ClassFrequencyTable& table, double beta) {
  const auto c = predicted_class(z.data());
  return ad::scale(consistency_cl(z, z_hat), scl_weight(table, c, beta));
}

double compute_k(double n_orig, double n_aug, double gamma) {
  return std::max(0.0, std::min(gamma * (n_orig - n_aug) + 0.5, 1.0));
}

ad::Value blend_target(const ad::Value& z, const ad::Value& z_hat, double k) {
  if (z.size() != z_hat.size()) throw DimensionError("blend_target: length mismatch");
  // Endpoints return the inputs unchanged (bit-exact).
  std::vector<double> blended(z.size());
  for (std::size_t i = 0; i < blended.size(); ++i) {
    if (k == 0.0) {
      blended[i] = z[i];
    } else if (k == 1.0) {
      blended[i] = z_hat[i];
    } else {
      blended[i] = (1.0 - k) * z[i] + k * z_hat[i];
    }
  }
  return ad::stop_gradient(ad::Value::constant(std::move(blended), z.rows(), z.cols()));
}

double abcl_k(std::span<const double> z, std::span<const double> z_hat,
              const ClassFrequencyTable& table, double gamma) {
  return compute_k(table[predicted_class(z)], table[predicted_class(z_hat)], gamma);
}

ad::Value consistency_abcl(const ad::Value& z, const ad::Value& z_hat,
                           const ClassFrequencyTable& table, const ConsistencyConfig& cfg) {
  if (table.n_classes() != z.size()) throw DimensionError("frequency table / class count mismatch");
  if (cfg.blending == BlendingMode::kSelective &&
      predicted_class(z.data()) == predicted_class(z_hat.data())) {
    return consistency_cl(z, z_hat);
  }
  const double k = abcl_k(z.data(), z_hat.data(), table, cfg.gamma);
  const auto target = blend_target(z, z_hat, k);
  return ad::add(ad::kl_div(target, z), ad::kl_div(target, z_hat));
}

ad::Value consistency_loss(const ad::Value& z, const ad::Value& z_hat,
                           const ClassFrequencyTable& table, const ConsistencyConfig& cfg) {
  switch (cfg.kind) {
    case ConsistencyKind::kCl: return consistency_cl(z, z_hat);
    case ConsistencyKind::kScl: return consistency_scl(z, z_hat, table, cfg.beta);
    case ConsistencyKind::kAbcl: return consistency_abcl(z, z_hat, table, cfg);
  }
  throw ContractError("unknown consistency kind");
}

}  // namespace imbassl
