#pragma once

#include <stdexcept>
#include <string>

namespace imbassl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN or infinite values where finite input is required.
class NumericInputError : public Error {
 public:
  using Error::Error;
};

// Caller violated a precondition (empty pool, non-scalar loss, bad index...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or unparsable config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DegenerateImageError : public Error {
 public:
  using Error::Error;
};

// Metric is mathematically undefined for the given input (e.g. AUC of one class).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Training loss became NaN or exceeded the divergence bound.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace imbassl
