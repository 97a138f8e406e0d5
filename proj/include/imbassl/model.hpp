#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "imbassl/autodiff.hpp"

namespace imbassl {

// Length-C discrete class distribution.
using ProbVector = std::vector<double>;

inline constexpr std::string_view kCheckpointMagic = "IMBASSL-CKPT-1";

// Fully connected ReLU network producing class logits. Copies are deep:
// a copy owns its own parameter arrays.
class MlpClassifier {
 public:
  // dims = (input, hidden..., classes). Glorot-uniform weights, zero biases.
  static MlpClassifier init(std::vector<std::size_t> dims, std::uint64_t seed);

  MlpClassifier(const MlpClassifier& other);
  MlpClassifier& operator=(const MlpClassifier& other);
  MlpClassifier(MlpClassifier&&) noexcept = default;
  MlpClassifier& operator=(MlpClassifier&&) noexcept = default;

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t n_classes() const { return dims_.back(); }
  std::uint64_t seed() const { return seed_; }
  std::size_t parameter_count() const;

  // Parameters in layer order: W0, b0, W1, b1, ...
  std::span<ad::Value> parameters() { return params_; }
  std::span<const ad::Value> parameters() const { return params_; }

  // Graph-building forward pass.
  ad::Value logits(const ad::Value& x) const;
  ad::Value proba(const ad::Value& x) const;

  // Plain evaluation without recording a graph; same arithmetic as proba().
  ProbVector predict_proba(std::span<const double> x) const;

  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

  void save(const std::filesystem::path& path) const;
  static MlpClassifier load(const std::filesystem::path& path);

 private:
  MlpClassifier(std::vector<std::size_t> dims, std::uint64_t seed, std::vector<ad::Value> params)
      : dims_(std::move(dims)), seed_(seed), params_(std::move(params)) {}

  void check_input(std::size_t n) const;

  std::vector<std::size_t> dims_;
  std::uint64_t seed_ = 0;
  std::vector<ad::Value> params_;
};

// Index of the largest probability; ties go to the lowest index.
std::size_t predicted_class(std::span<const double> p);

}  // namespace imbassl
