#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "imbassl/autodiff.hpp"

namespace imbassl {

// Per-class frequency fractions of the training split.
class ClassFrequencyTable {
 public:
  ClassFrequencyTable() = default;
  // Throws ConfigError unless entries are in [0,1] and sum to 1 within 1e-9.
  explicit ClassFrequencyTable(std::vector<double> freqs);

  std::size_t n_classes() const { return freqs_.size(); }
  double operator[](std::size_t c) const { return freqs_[c]; }
  const std::vector<double>& freqs() const { return freqs_; }
  double min() const;
  double max() const;

 private:
  std::vector<double> freqs_;
};

enum class ConsistencyKind { kCl, kScl, kAbcl };
enum class BlendingMode { kAlwaysOn, kSelective };

struct ConsistencyConfig {
  ConsistencyKind kind = ConsistencyKind::kAbcl;
  double gamma = 0.4;         // ABCL compensation strength, (0,1]
  double beta = 0.8;          // SCL suppression at the rarest class, (0,1]
  BlendingMode blending = BlendingMode::kAlwaysOn;
  double unsup_weight = 1.0;  // coefficient on the consistency term

  void validate() const;
};

std::string_view to_string(ConsistencyKind kind);
std::string_view to_string(BlendingMode mode);
BlendingMode parse_blending(std::string_view text);

// −ln p[label], floored.
ad::Value cross_entropy(const ad::Value& p, std::size_t label);

// (1 − freq[label]) · CE
ad::Value weighted_ce(const ad::Value& p, std::size_t label, const ClassFrequencyTable& table);

// −(1 − p[label])^gamma_f · ln p[label]
ad::Value focal_loss(const ad::Value& p, std::size_t label, double gamma_f);

// KL(stop_gradient(z) ‖ z_hat): the original prediction is the fixed target.
ad::Value consistency_cl(const ad::Value& z, const ad::Value& z_hat);

// Suppression weight for predicted class c. Linear in class frequency from
// beta at the rarest class to 1 at the most frequent; 1 when all classes
// are equally frequent.
// NOTE: stand-in for the published SCL schedule, which only fixes the
// endpoints' behaviour (full weight for major, beta for minor classes).
double scl_weight(const ClassFrequencyTable& table, std::size_t c, double beta);

ad::Value consistency_scl(const ad::Value& z, const ad::Value& z_hat,
                          const ClassFrequencyTable& table, double beta);

// max(0, min(gamma·(n_orig − n_aug) + 0.5, 1)) with n_* frequency fractions
// of the classes predicted for the original and augmented sample.
double compute_k(double n_orig, double n_aug, double gamma);

// stop_gradient((1−k)·z + k·z_hat)
ad::Value blend_target(const ad::Value& z, const ad::Value& z_hat, double k);

// Blending weight ABCL uses for this pair.
double abcl_k(std::span<const double> z, std::span<const double> z_hat,
              const ClassFrequencyTable& table, double gamma);

// KL(z_b ‖ z) + KL(z_b ‖ z_hat) with z_b the blended, gradient-free target.
// In selective mode, agreeing predictions fall back to consistency_cl.
ad::Value consistency_abcl(const ad::Value& z, const ad::Value& z_hat,
                           const ClassFrequencyTable& table, const ConsistencyConfig& cfg);

// Dispatches on cfg.kind. Does not apply cfg.unsup_weight.
ad::Value consistency_loss(const ad::Value& z, const ad::Value& z_hat,
                           const ClassFrequencyTable& table, const ConsistencyConfig& cfg);

}  // namespace imbassl
