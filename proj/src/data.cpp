#include "imbassl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "imbassl/errors.hpp"
#include "imbassl/log.hpp"

namespace imbassl {

void Dataset::add_labeled(std::span<const double> x, std::size_t label) {
  if (x.size() != n_features_) throw DimensionError("feature row has the wrong width");
  if (label >= n_classes_) throw ContractError("label " + std::to_string(label) + " >= n_classes");
  if (!labels_.empty() || empty()) {
    features_.insert(features_.end(), x.begin(), x.end());
    labels_.push_back(label);
    return;
  }
  throw ContractError("cannot add a labeled row to an unlabeled dataset");
}

void Dataset::add_unlabeled(std::span<const double> x) {
  if (x.size() != n_features_) throw DimensionError("feature row has the wrong width");
  if (!labels_.empty()) throw ContractError("cannot add an unlabeled row to a labeled dataset");
  features_.insert(features_.end(), x.begin(), x.end());
}

Dataset Dataset::without_labels() const {
  Dataset out = *this;
  out.labels_.clear();
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(n_features_, n_classes_);
  out.features_.reserve(indices.size() * n_features_);
  for (auto i : indices) {
    const auto r = row(i);
    out.features_.insert(out.features_.end(), r.begin(), r.end());
    if (!labels_.empty()) out.labels_.push_back(labels_[i]);
  }
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(n_classes_, 0);
  for (auto l : labels_) ++counts[l];
  return counts;
}

void Dataset::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t j = 0; j < n_features_; ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[40];
  for (std::size_t i = 0; i < size(); ++i) {
    for (double v : row(i)) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ',';
    }
    if (labels_.empty()) {
      out << "-1\n";
    } else {
      out << labels_[i] << '\n';
    }
  }
}

Dataset Dataset::load_csv(const std::filesystem::path& path, std::size_t n_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
  std::size_t n_cols = std::count(line.begin(), line.end(), ',') + 1;
  if (n_cols < 2 || line.substr(line.rfind(',') + 1) != "label") {
    throw ConfigError(path.string() + ": header must be f0,...,fD-1,label");
  }
  const std::size_t dim = n_cols - 1;
  std::vector<double> features;
  std::vector<long> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(fields, cell, ',')) {
      char* end = nullptr;
      if (col < dim) {
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || !std::isfinite(v)) {
          throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad feature '" + cell + "'");
        }
        features.push_back(v);
      } else {
        const long l = std::strtol(cell.c_str(), &end, 10);
        if (end == cell.c_str() || l < -1) {
          throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad label '" + cell + "'");
        }
        labels.push_back(l);
      }
      ++col;
    }
    if (col != n_cols) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(n_cols) + " columns");
    }
  }
  const bool all_unlabeled = std::all_of(labels.begin(), labels.end(), [](long l) { return l < 0; });
  const bool any_unlabeled = std::any_of(labels.begin(), labels.end(), [](long l) { return l < 0; });
  if (any_unlabeled && !all_unlabeled) {
    throw ConfigError(path.string() + ": mixes labeled and unlabeled rows");
  }
  if (n_classes == 0 && !all_unlabeled) {
    n_classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  }
  Dataset out(dim, n_classes);
  out.features_ = std::move(features);
  if (!all_unlabeled) {
    for (long l : labels) {
      if (static_cast<std::size_t>(l) >= n_classes) throw ConfigError(path.string() + ": label >= n_classes");
      out.labels_.push_back(static_cast<std::size_t>(l));
    }
  }
  return out;
}

void GaussianMixtureSpec::validate() const {
  const std::size_t c = class_fractions.size();
  if (c < 2) throw ConfigError("need at least 2 class fractions");
  double total = 0.0;
  for (double f : class_fractions) {
    // Every class must be representable in the labeled/val/test splits.
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("class fractions must be in (0,1]");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("class fractions must sum to 1");
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (!(cov_scale > 0.0)) throw ConfigError("cov_scale must be > 0");
  if (!means.empty()) {
    if (means.size() != c) throw ConfigError("means must have one row per class");
    for (const auto& m : means) {
      if (m.size() != dim) throw ConfigError("mean rows must have length dim");
    }
  }
  if (n_labeled == 0 || n_val == 0 || n_test == 0) throw ConfigError("split sizes must be positive");
}

std::vector<std::vector<double>> default_class_means(std::size_t n_classes, std::size_t dim,
                                                     double distance) {
  std::vector<std::vector<double>> means(n_classes, std::vector<double>(dim, 0.0));
  if (dim >= n_classes) {
    for (std::size_t c = 0; c < n_classes; ++c) means[c][c] = distance / std::numbers::sqrt2;
  } else if (dim >= 2) {
    const double radius = distance / (2.0 * std::sin(std::numbers::pi / static_cast<double>(n_classes)));
    for (std::size_t c = 0; c < n_classes; ++c) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(n_classes);
      means[c][0] = radius * std::cos(angle);
      means[c][1] = radius * std::sin(angle);
    }
  } else {
    for (std::size_t c = 0; c < n_classes; ++c) means[c][0] = distance * static_cast<double>(c);
  }
  return means;
}

namespace {

std::size_t sample_class(std::span<const double> cdf, Rng& rng) {
  const double u = rng.uniform();
  for (std::size_t c = 0; c + 1 < cdf.size(); ++c) {
    if (u < cdf[c]) return c;
  }
  return cdf.size() - 1;
}

// Multinomial draw of n labels. If `guarantee` and n ≥ C, classes that came
// up empty take a slot from the currently largest class.
std::vector<std::size_t> draw_labels(std::size_t n, std::span<const double> fractions, bool guarantee,
                                     Rng& rng) {
  std::vector<double> cdf(fractions.size());
  std::partial_sum(fractions.begin(), fractions.end(), cdf.begin());
  std::vector<std::size_t> labels(n);
  for (auto& l : labels) l = sample_class(cdf, rng);
  if (!guarantee || n < fractions.size()) return labels;
  std::vector<std::size_t> counts(fractions.size(), 0);
  for (auto l : labels) ++counts[l];
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) continue;
    const auto donor = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    std::vector<std::size_t> donor_slots;
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] == donor) donor_slots.push_back(i);
    }
    labels[donor_slots[rng.below(donor_slots.size())]] = c;
    --counts[donor];
    ++counts[c];
  }
  return labels;
}

Dataset draw_split(std::size_t n, const GaussianMixtureSpec& spec,
                   const std::vector<std::vector<double>>& means, bool guarantee, Rng& rng) {
  const std::size_t c = spec.class_fractions.size();
  const auto labels = draw_labels(n, spec.class_fractions, guarantee, rng);
  const double sigma = std::sqrt(spec.cov_scale);
  Dataset out(spec.dim, c);
  std::vector<double> x(spec.dim);
  for (auto label : labels) {
    for (std::size_t j = 0; j < spec.dim; ++j) x[j] = rng.normal(means[label][j], sigma);
    out.add_labeled(x, label);
  }
  return out;
}

}  // namespace

MixtureSplits generate_gaussian_mixture(const GaussianMixtureSpec& spec) {
  spec.validate();
  const std::size_t c = spec.class_fractions.size();
  const double distance = spec.mean_distance > 0.0 ? spec.mean_distance : 2.0 * spec.cov_scale;
  const auto means = spec.means.empty() ? default_class_means(c, spec.dim, distance) : spec.means;
  Rng rng(spec.seed);
  MixtureSplits out;
  out.labeled = draw_split(spec.n_labeled, spec, means, true, rng);
  out.unlabeled = draw_split(spec.n_unlabeled, spec, means, false, rng).without_labels();
  out.val = draw_split(spec.n_val, spec, means, true, rng);
  out.test = draw_split(spec.n_test, spec, means, true, rng);
  return out;
}

std::vector<Dataset> stratified_split(const Dataset& data, std::span<const double> ratios,
                                      std::uint64_t seed) {
  if (!data.labeled()) throw ContractError("stratified_split needs labels");
  if (ratios.empty()) throw ConfigError("no split ratios given");
  const double total = std::accumulate(ratios.begin(), ratios.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  for (double r : ratios) {
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
  }

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> by_class(data.n_classes());
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.label(i)].push_back(i);

  std::vector<std::vector<std::size_t>> split_indices(ratios.size());
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < ratios.size()) {
      log_warning("class " + std::to_string(c) + " has only " + std::to_string(members.size()) +
                  " samples; split allocation is best-effort");
    }
    rng.shuffle(members.begin(), members.end());
    const double n = static_cast<double>(members.size());
    std::vector<std::size_t> quota(ratios.size());
    std::vector<double> remainder(ratios.size());
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < ratios.size(); ++s) {
      const double exact = n * ratios[s];
      quota[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      remainder[s] = exact - static_cast<double>(quota[s]);
      assigned += quota[s];
    }
    std::vector<std::size_t> order(ratios.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < members.size(); ++i, ++assigned) ++quota[order[i % order.size()]];
    std::size_t pos = 0;
    for (std::size_t s = 0; s < ratios.size(); ++s) {
      for (std::size_t k = 0; k < quota[s]; ++k) split_indices[s].push_back(members[pos++]);
    }
  }

  std::vector<Dataset> out;
  out.reserve(ratios.size());
  for (auto& idx : split_indices) {
    std::sort(idx.begin(), idx.end());
    out.push_back(data.subset(idx));
  }
  return out;
}

LabeledUnlabeled split_labeled(const Dataset& train, double labeled_fraction, std::uint64_t seed) {
  if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) {
    throw ConfigError("labeled_fraction must be in (0,1]");
  }
  const double ratios[] = {labeled_fraction, 1.0 - labeled_fraction};
  auto parts = stratified_split(train, ratios, seed);
  return {std::move(parts[0]), parts[1].without_labels()};
}

ClassFrequencyTable class_frequencies(std::span<const std::size_t> labels, std::size_t n_classes) {
  if (labels.empty()) throw ContractError("class_frequencies of an empty label set");
  std::vector<double> counts(n_classes, 0.0);
  for (auto l : labels) {
    if (l >= n_classes) throw ContractError("label out of range in class_frequencies");
    counts[l] += 1.0;
  }
  const double n = static_cast<double>(labels.size());
  for (auto& c : counts) c /= n;
  return ClassFrequencyTable(std::move(counts));
}

BatchComposer::BatchComposer(const Dataset& labeled_pool, const Dataset& unlabeled_pool,
                             BatchConfig config, std::uint64_t batching_seed, std::uint64_t augment_seed)
    : labeled_(labeled_pool),
      unlabeled_(unlabeled_pool),
      config_(config),
      batch_rng_(batching_seed),
      augment_rng_(augment_seed) {
  if (labeled_.empty()) throw ContractError("labeled pool is empty");
  if (config_.n_unlabeled > 0 && unlabeled_.empty()) throw ContractError("unlabeled pool is empty");
  if (!labeled_.labeled()) throw ContractError("labeled pool has no labels");
  labeled_order_.resize(labeled_.size());
  std::iota(labeled_order_.begin(), labeled_order_.end(), 0);
  unlabeled_order_.resize(unlabeled_.size());
  std::iota(unlabeled_order_.begin(), unlabeled_order_.end(), 0);
  labeled_cursor_ = labeled_order_.size();
  unlabeled_cursor_ = unlabeled_order_.size();
}

std::size_t BatchComposer::next_index(std::vector<std::size_t>& order, std::size_t& cursor) {
  if (cursor >= order.size()) {
    batch_rng_.shuffle(order.begin(), order.end());
    cursor = 0;
  }
  return order[cursor++];
}

Batch BatchComposer::compose_batch() {
  Batch batch;
  batch.labeled_x.reserve(config_.n_labeled);
  for (std::size_t i = 0; i < config_.n_labeled; ++i) {
    const auto idx = next_index(labeled_order_, labeled_cursor_);
    const auto row = labeled_.row(idx);
    if (config_.labeled_sigma > 0.0) {
      batch.labeled_x.push_back(perturb_vector(
          row, {PerturbMode::kVector, config_.labeled_sigma, augment_rng_.next_u64()}));
    } else {
      batch.labeled_x.emplace_back(row.begin(), row.end());
    }
    batch.labels.push_back(labeled_.label(idx));
  }
  for (std::size_t i = 0; i < config_.n_unlabeled; ++i) {
    const auto idx = next_index(unlabeled_order_, unlabeled_cursor_);
    const auto row = unlabeled_.row(idx);
    batch.unlabeled_x.emplace_back(row.begin(), row.end());
    batch.augmented_x.push_back(
        perturb_vector(row, {PerturbMode::kVector, config_.unlabeled_sigma, augment_rng_.next_u64()}));
  }
  return batch;
}

std::size_t BatchComposer::steps_per_epoch() const {
  return (labeled_.size() + config_.n_labeled - 1) / config_.n_labeled;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

Dataset smote_oversample(const Dataset& data, std::span<const std::size_t> target_count_per_class,
                         std::size_t k_neighbors, Rng& rng) {
  if (!data.labeled()) throw ContractError("smote_oversample needs labels");
  if (k_neighbors < 1) throw ContractError("k_neighbors must be >= 1");
  if (target_count_per_class.size() != data.n_classes()) throw ContractError("one target per class required");
  Dataset out = data;
  std::vector<std::vector<std::size_t>> by_class(data.n_classes());
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.label(i)].push_back(i);

  std::vector<double> synthetic(data.n_features());
  for (std::size_t c = 0; c < data.n_classes(); ++c) {
    const auto& members = by_class[c];
    const std::size_t target = target_count_per_class[c];
    if (members.size() >= target) continue;
    if (members.empty()) {
      throw ContractError("cannot oversample class " + std::to_string(c) + " with no samples");
    }
    const std::size_t needed = target - members.size();
    if (members.size() == 1) {
      log_warning("class " + std::to_string(c) + " has a single sample; duplicating it");
      for (std::size_t n = 0; n < needed; ++n) out.add_labeled(data.row(members[0]), c);
      continue;
    }
    // k nearest same-class neighbours of every member (ties by index).
    const std::size_t k = std::min(k_neighbors, members.size() - 1);
    std::vector<std::vector<std::size_t>> neighbors(members.size());
    for (std::size_t a = 0; a < members.size(); ++a) {
      std::vector<std::pair<double, std::size_t>> dist;
      for (std::size_t b = 0; b < members.size(); ++b) {
        if (a != b) dist.emplace_back(squared_distance(data.row(members[a]), data.row(members[b])), b);
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
      for (std::size_t j = 0; j < k; ++j) neighbors[a].push_back(dist[j].second);
    }
    for (std::size_t n = 0; n < needed; ++n) {
      const auto a = static_cast<std::size_t>(rng.below(members.size()));
      const auto b = neighbors[a][rng.below(k)];
      const double lambda = rng.uniform();
      const auto xa = data.row(members[a]);
      const auto xb = data.row(members[b]);
      for (std::size_t j = 0; j < synthetic.size(); ++j) synthetic[j] = xa[j] + lambda * (xb[j] - xa[j]);
      out.add_labeled(synthetic, c);
    }
  }
  return out;
}

Dataset random_undersample(const Dataset& data, std::span<const std::size_t> target_count_per_class,
                           Rng& rng) {
  if (!data.labeled()) throw ContractError("random_undersample needs labels");
  if (target_count_per_class.size() != data.n_classes()) throw ContractError("one target per class required");
  std::vector<std::vector<std::size_t>> by_class(data.n_classes());
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.label(i)].push_back(i);
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < data.n_classes(); ++c) {
    auto& members = by_class[c];
    const std::size_t target = target_count_per_class[c];
    if (target > members.size()) {
      throw ContractError("undersample target " + std::to_string(target) + " exceeds the " +
                          std::to_string(members.size()) + " samples of class " + std::to_string(c));
    }
    rng.shuffle(members.begin(), members.end());
    keep.insert(keep.end(), members.begin(), members.begin() + static_cast<long>(target));
  }
  std::sort(keep.begin(), keep.end());
  return data.subset(keep);
}

Dataset sampling_baseline(const Dataset& data, std::size_t k_neighbors, Rng& rng) {
  auto counts = data.class_counts();
  auto sorted = counts;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t median = sorted[(sorted.size() - 1) / 2];
  std::vector<std::size_t> up(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) up[c] = std::max(counts[c], median);
  Dataset oversampled = smote_oversample(data, up, k_neighbors, rng);
  const auto largest = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  auto down = oversampled.class_counts();
  down[largest] = std::min(down[largest], median);
  return random_undersample(oversampled, down, rng);
}

double within_class_std(const Dataset& data) {
  if (!data.labeled() || data.empty()) throw ContractError("within_class_std needs labeled data");
  const std::size_t d = data.n_features();
  std::vector<std::vector<double>> sums(data.n_classes(), std::vector<double>(d, 0.0));
  const auto counts = data.class_counts();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) sums[data.label(i)][j] += r[j];
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = data.row(i);
    const auto c = data.label(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = r[j] - sums[c][j] / static_cast<double>(counts[c]);
      ss += diff * diff;
    }
  }
  std::size_t used_classes = 0;
  for (auto n : counts) used_classes += n > 0 ? 1 : 0;
  const double dof = static_cast<double>((data.size() - used_classes) * d);
  return dof > 0 ? std::sqrt(ss / dof) : 0.0;
}

}  // namespace imbassl
