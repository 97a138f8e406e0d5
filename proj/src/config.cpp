#include "imbassl/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "imbassl/errors.hpp"
#include "imbassl/experiment.hpp"

namespace imbassl {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty element in list '" + text + "'");
    items.push_back(item);
  }
  if (items.empty()) throw ConfigError("empty list");
  return items;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError("'" + s + "' is not a finite number");
  }
  return v;
}

std::uint64_t to_uint(const std::string& s) {
  char* end = nullptr;
  errno = 0;
  if (s.empty() || s[0] == '-') throw ConfigError("'" + s + "' is not a non-negative integer");
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw ConfigError("'" + s + "' is not a non-negative integer");
  }
  return v;
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_double(item));
  return out;
}

std::vector<std::uint64_t> parse_uint_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) out.push_back(to_uint(item));
  return out;
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError(where() + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected 'key = value'");
    if (section.empty()) throw ConfigError(where() + "key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where() + "empty key");
    auto& entries = cfg.sections_[section];
    if (entries.count(key)) throw ConfigError(where() + "duplicate key '" + key + "' in [" + section + "]");
    entries[key] = Entry{value, line_no};
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

const ConfigFile::Entry* ConfigFile::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto e = s->second.find(key);
  if (e == s->second.end()) return nullptr;
  e->second.used = true;
  return &e->second;
}

void ConfigFile::fail(const Entry& e, const std::string& section, const std::string& key,
                      const std::string& why) const {
  throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": [" + section + "] " + key + ": " + why);
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::optional<std::string> ConfigFile::get_string(const std::string& section, const std::string& key) const {
  const auto* e = find(section, key);
  if (!e) return std::nullopt;
  return e->value;
}

#define IMBASSL_TYPED_GET(expr)         \
  const auto* e = find(section, key);   \
  if (!e) return std::nullopt;          \
  try {                                 \
    return expr;                        \
  } catch (const ConfigError& err) {    \
    fail(*e, section, key, err.what()); \
  }

std::optional<double> ConfigFile::get_double(const std::string& section, const std::string& key) const {
  IMBASSL_TYPED_GET(to_double(e->value))
}

std::optional<std::uint64_t> ConfigFile::get_uint(const std::string& section, const std::string& key) const {
  IMBASSL_TYPED_GET(to_uint(e->value))
}

std::optional<std::vector<double>> ConfigFile::get_doubles(const std::string& section,
                                                           const std::string& key) const {
  IMBASSL_TYPED_GET(parse_double_list(e->value))
}

std::optional<std::vector<std::uint64_t>> ConfigFile::get_uints(const std::string& section,
                                                                const std::string& key) const {
  IMBASSL_TYPED_GET(parse_uint_list(e->value))
}

#undef IMBASSL_TYPED_GET

std::optional<bool> ConfigFile::get_bool(const std::string& section, const std::string& key) const {
  const auto* e = find(section, key);
  if (!e) return std::nullopt;
  if (e->value == "true") return true;
  if (e->value == "false") return false;
  fail(*e, section, key, "expected true or false, got '" + e->value + "'");
}

void ConfigFile::reject_unused() const {
  for (const auto& [section, entries] : sections_) {
    for (const auto& [key, entry] : entries) {
      if (!entry.used) fail(entry, section, key, "unknown key");
    }
  }
}

namespace {

template <class T, class U>
void assign(T& field, const std::optional<U>& v) {
  if (v) field = static_cast<T>(*v);
}

}  // namespace

ExperimentConfig parse_experiment_config(const ConfigFile& file) {
  ExperimentConfig cfg;
  auto& ds = cfg.dataset;
  if (auto source = file.get_string("dataset", "source")) {
    if (*source == "gaussian") {
      ds.source = DatasetSource::kGaussian;
    } else if (*source == "csv") {
      ds.source = DatasetSource::kCsv;
    } else {
      throw ConfigError("[dataset] source: expected gaussian or csv, got '" + *source + "'");
    }
  }
  assign(ds.gaussian.class_fractions, file.get_doubles("dataset", "fractions"));
  assign(ds.gaussian.dim, file.get_uint("dataset", "dim"));
  assign(ds.gaussian.cov_scale, file.get_double("dataset", "cov_scale"));
  assign(ds.gaussian.mean_distance, file.get_double("dataset", "mean_distance"));
  assign(ds.gaussian.n_labeled, file.get_uint("dataset", "n_labeled"));
  assign(ds.gaussian.n_unlabeled, file.get_uint("dataset", "n_unlabeled"));
  assign(ds.gaussian.n_val, file.get_uint("dataset", "n_val"));
  assign(ds.gaussian.n_test, file.get_uint("dataset", "n_test"));
  if (auto seed = file.get_uint("dataset", "seed")) ds.fixed_seed = *seed;
  if (auto path = file.get_string("dataset", "path")) ds.csv_path = *path;
  assign(ds.labeled_fraction, file.get_double("dataset", "labeled_fraction"));
  if (ds.source == DatasetSource::kCsv && ds.csv_path.empty()) {
    throw ConfigError("[dataset] path is required when source = csv");
  }
  if (ds.source == DatasetSource::kGaussian) ds.gaussian.validate();

  if (auto hidden = file.get_uints("model", "hidden")) {
    cfg.hidden.assign(hidden->begin(), hidden->end());
    for (auto h : cfg.hidden) {
      if (h == 0) throw ConfigError("[model] hidden: layer sizes must be >= 1");
    }
  }

  auto& t = cfg.train;
  assign(t.epochs, file.get_uint("train", "epochs"));
  assign(t.lr, file.get_double("train", "lr"));
  assign(t.momentum, file.get_double("train", "momentum"));
  assign(t.weight_decay, file.get_double("train", "weight_decay"));
  assign(t.batch_labeled, file.get_uint("train", "batch_labeled"));
  assign(t.batch_unlabeled, file.get_uint("train", "batch_unlabeled"));
  assign(t.focal_gamma, file.get_double("train", "focal_gamma"));
  auto& c = cfg.consistency;
  assign(c.gamma, file.get_double("train", "gamma"));
  assign(c.beta, file.get_double("train", "beta"));
  assign(c.unsup_weight, file.get_double("train", "unsup_weight"));
  if (auto blending = file.get_string("train", "blending")) c.blending = parse_blending(*blending);
  if (auto sigma = file.get_string("train", "noise_sigma"); sigma && *sigma != "auto") {
    cfg.noise_sigma = file.get_double("train", "noise_sigma");
  }
  assign(cfg.noise_scale, file.get_double("train", "noise_scale"));
  assign(cfg.strong_factor, file.get_double("train", "strong_factor"));
  assign(cfg.augment_labeled, file.get_bool("train", "augment_labeled"));
  assign(cfg.smote_k, file.get_uint("train", "smote_k"));
  c.validate();
  t.validate();

  assign(cfg.method, file.get_string("experiment", "method"));
  assign(cfg.seeds, file.get_uints("experiment", "seeds"));
  find_method(cfg.method);

  file.reject_unused();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(ConfigFile::load(path));
}

}  // namespace imbassl
