#include "imbassl/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "imbassl/errors.hpp"
#include "imbassl/random.hpp"

namespace imbassl {

namespace {

std::vector<ad::Value> deep_copy(std::span<const ad::Value> params) {
  std::vector<ad::Value> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(ad::Value::variable(p.data(), p.rows(), p.cols()));
  return out;
}

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

}  // namespace

MlpClassifier MlpClassifier::init(std::vector<std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("model dims need at least an input and an output size");
  for (auto d : dims) {
    if (d < 1) throw ConfigError("model dims must all be >= 1");
  }
  Rng rng(seed);
  std::vector<ad::Value> params;
  for (std::size_t layer = 0; layer + 1 < dims.size(); ++layer) {
    const std::size_t fan_in = dims[layer];
    const std::size_t fan_out = dims[layer + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_in * fan_out);
    for (auto& v : w) v = rng.uniform(-limit, limit);
    params.push_back(ad::Value::variable(std::move(w), fan_out, fan_in));
    params.push_back(ad::Value::variable(std::vector<double>(fan_out, 0.0), fan_out, 1));
  }
  return MlpClassifier(std::move(dims), seed, std::move(params));
}

MlpClassifier::MlpClassifier(const MlpClassifier& other)
    : dims_(other.dims_), seed_(other.seed_), params_(deep_copy(other.params_)) {}

MlpClassifier& MlpClassifier::operator=(const MlpClassifier& other) {
  if (this != &other) {
    dims_ = other.dims_;
    seed_ = other.seed_;
    params_ = deep_copy(other.params_);
  }
  return *this;
}

std::size_t MlpClassifier::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

void MlpClassifier::check_input(std::size_t n) const {
  if (n != input_dim()) {
    throw DimensionError("model expects " + std::to_string(input_dim()) + " features, got " +
                         std::to_string(n));
  }
}

ad::Value MlpClassifier::logits(const ad::Value& x) const {
  check_input(x.size());
  ad::Value h = x;
  const std::size_t n_layers = params_.size() / 2;
  for (std::size_t layer = 0; layer < n_layers; ++layer) {
    h = ad::linear(params_[2 * layer], params_[2 * layer + 1], h);
    if (layer + 1 < n_layers) h = ad::relu(h);
  }
  return h;
}

ad::Value MlpClassifier::proba(const ad::Value& x) const { return ad::softmax(logits(x)); }

ProbVector MlpClassifier::predict_proba(std::span<const double> x) const {
  check_input(x.size());
  std::vector<double> h(x.begin(), x.end());
  const std::size_t n_layers = params_.size() / 2;
  for (std::size_t layer = 0; layer < n_layers; ++layer) {
    const auto& w = params_[2 * layer];
    const auto& b = params_[2 * layer + 1].data();
    const std::size_t out = w.rows();
    const std::size_t in = w.cols();
    std::vector<double> next(b);
    for (std::size_t r = 0; r < out; ++r) {
      double acc = 0.0;
      const double* row = w.data().data() + r * in;
      for (std::size_t c = 0; c < in; ++c) acc += row[c] * h[c];
      next[r] += acc;
      if (layer + 1 < n_layers && !(next[r] > 0.0)) next[r] = 0.0;
    }
    h = std::move(next);
  }
  return ad::softmax(ad::Value::constant(std::move(h), n_classes())).data();
}

std::vector<std::vector<double>> MlpClassifier::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.data());
  return out;
}

void MlpClassifier::restore(const std::vector<std::vector<double>>& values) {
  if (values.size() != params_.size()) throw DimensionError("snapshot has the wrong parameter count");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != params_[i].size()) throw DimensionError("snapshot array size mismatch");
    params_[i].mutable_data() = values[i];
  }
}

void MlpClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << kCheckpointMagic << '\n';
  out << "dims";
  for (auto d : dims_) out << ' ' << d;
  out << '\n' << "seed " << seed_ << '\n';
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    out << (i % 2 == 0 ? 'W' : 'b') << i / 2 << ' ' << p.rows() << ' ' << p.cols() << '\n';
    for (std::size_t j = 0; j < p.size(); ++j) out << (j ? " " : "") << hex_double(p[j]);
    out << '\n';
  }
}

MlpClassifier MlpClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw ConfigError(path.string() + ": not an " + std::string(kCheckpointMagic) + " checkpoint");
  }
  std::getline(in, line);
  std::istringstream dims_line(line);
  std::string tag;
  dims_line >> tag;
  if (tag != "dims") throw ConfigError(path.string() + ": missing dims header");
  std::vector<std::size_t> dims;
  for (std::size_t d; dims_line >> d;) dims.push_back(d);
  std::getline(in, line);
  std::istringstream seed_line(line);
  std::uint64_t seed = 0;
  if (!(seed_line >> tag >> seed) || tag != "seed") {
    throw ConfigError(path.string() + ": missing seed header");
  }
  auto model = init(dims, seed);
  for (auto& p : model.params_) {
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": truncated checkpoint");
    std::istringstream header(line);
    header >> tag >> rows >> cols;
    if (rows != p.rows() || cols != p.cols()) {
      throw ConfigError(path.string() + ": parameter " + tag + " has unexpected shape");
    }
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": truncated checkpoint");
    std::istringstream body(line);
    auto& data = p.mutable_data();
    for (auto& v : data) {
      std::string token;
      if (!(body >> token)) throw ConfigError(path.string() + ": truncated parameter " + tag);
      v = std::strtod(token.c_str(), nullptr);
    }
  }
  return model;
}

std::size_t predicted_class(std::span<const double> p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

}  // namespace imbassl
