#include "imbassl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>

#include <json.hpp>

#include "imbassl/data.hpp"
#include "imbassl/errors.hpp"
#include "imbassl/log.hpp"

namespace imbassl {

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < n_; ++p) s += at(truth, p);
  return s;
}

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

ConfusionMatrix confusion_matrix(std::span<const std::size_t> preds, std::span<const std::size_t> labels,
                                 std::size_t n_classes) {
  if (preds.size() != labels.size()) throw DimensionError("confusion_matrix: length mismatch");
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= n_classes || labels[i] >= n_classes) throw ContractError("confusion_matrix: class out of range");
    ++cm.at(labels[i], preds[i]);
  }
  return cm;
}

std::vector<double> per_class_recall(const ConfusionMatrix& cm) {
  std::vector<double> recall(cm.n_classes(), 0.0);
  for (std::size_t c = 0; c < cm.n_classes(); ++c) {
    const auto support = cm.row_sum(c);
    if (support == 0) {
      log_warning("class " + std::to_string(c) + " has no samples; recall set to 0");
      continue;
    }
    recall[c] = static_cast<double>(cm.at(c, c)) / static_cast<double>(support);
  }
  return recall;
}

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double geometric_mean(std::span<const double> v) {
  double log_sum = 0.0;
  for (double r : v) {
    if (r <= 0.0) return 0.0;
    log_sum += std::log(r);
  }
  return std::exp(log_sum / static_cast<double>(v.size()));
}

}  // namespace

double uar(const ConfusionMatrix& cm) { return mean_of(per_class_recall(cm)); }

double g_mean(const ConfusionMatrix& cm) { return geometric_mean(per_class_recall(cm)); }

namespace {

struct SweepCounts {
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
};

SweepCounts count_classes(std::span<const double> scores, std::span<const bool> positives) {
  if (scores.size() != positives.size()) throw DimensionError("roc: scores/labels length mismatch");
  SweepCounts n;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw NumericInputError("roc: non-finite score");
    (positives[i] ? n.positives : n.negatives) += 1;
  }
  if (n.positives == 0 || n.negatives == 0) {
    throw UndefinedMetricError("ROC/AUC needs at least one positive and one negative sample");
  }
  return n;
}

std::vector<std::size_t> order_by_score_desc(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const bool> positives) {
  const auto n = count_classes(scores, positives);
  const auto order = order_by_score_desc(scores);
  std::vector<RocPoint> curve{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == threshold; ++i) (positives[order[i]] ? tp : fp) += 1;
    curve.push_back({threshold, static_cast<double>(fp) / static_cast<double>(n.negatives),
                     static_cast<double>(tp) / static_cast<double>(n.positives)});
  }
  return curve;
}

double roc_auc(std::span<const double> scores, std::span<const bool> positives) {
  const auto n = count_classes(scores, positives);
  const auto order = order_by_score_desc(scores);
  // Twice the trapezoid area in units of (1/N)·(1/P); integer-exact.
  std::uint64_t doubled_area = 0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    const std::uint64_t tp_before = tp;
    const std::uint64_t fp_before = fp;
    for (; i < order.size() && scores[order[i]] == threshold; ++i) (positives[order[i]] ? tp : fp) += 1;
    doubled_area += (fp - fp_before) * (tp + tp_before);
  }
  return static_cast<double>(doubled_area) / (2.0 * static_cast<double>(n.positives * n.negatives));
}

MetricsReport evaluate_probabilities(std::span<const double> probs, std::span<const std::size_t> labels,
                                     std::size_t n_classes) {
  if (probs.size() != labels.size() * n_classes) throw DimensionError("evaluate: probability matrix shape");
  if (labels.empty()) throw ContractError("evaluate: empty dataset");
  const std::size_t n = labels.size();
  std::vector<std::size_t> preds(n);
  for (std::size_t i = 0; i < n; ++i) preds[i] = predicted_class(probs.subspan(i * n_classes, n_classes));

  MetricsReport report;
  report.confusion = confusion_matrix(preds, labels, n_classes);
  report.per_class_recall = per_class_recall(report.confusion);
  report.uar = mean_of(report.per_class_recall);
  report.g_mean = geometric_mean(report.per_class_recall);

  report.per_class_auc.assign(n_classes, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> scores(n);
  std::unique_ptr<bool[]> positives(new bool[n]);
  double auc_sum = 0.0;
  std::size_t auc_count = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = probs[i * n_classes + c];
      positives[i] = labels[i] == c;
    }
    try {
      report.per_class_auc[c] = roc_auc(scores, std::span<const bool>(positives.get(), n));
      auc_sum += report.per_class_auc[c];
      ++auc_count;
    } catch (const UndefinedMetricError&) {
      log_warning("AUC undefined for class " + std::to_string(c) + "; excluded from the average");
    }
  }
  report.avg_auc = auc_count > 0 ? auc_sum / static_cast<double>(auc_count)
                                 : std::numeric_limits<double>::quiet_NaN();
  return report;
}

namespace {

std::vector<double> probability_matrix(const MlpClassifier& model, const Dataset& data) {
  std::vector<double> probs;
  probs.reserve(data.size() * model.n_classes());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto p = model.predict_proba(data.row(i));
    probs.insert(probs.end(), p.begin(), p.end());
  }
  return probs;
}

}  // namespace

MetricsReport evaluate(const MlpClassifier& model, const Dataset& data) {
  if (!data.labeled()) throw ContractError("evaluate needs a labeled dataset");
  if (data.n_classes() != model.n_classes()) throw DimensionError("model / dataset class count mismatch");
  return evaluate_probabilities(probability_matrix(model, data), data.labels(), model.n_classes());
}

std::string report_to_json(const MetricsReport& report) {
  using nlohmann::ordered_json;
  auto number_or_null = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
  ordered_json j;
  j["per_class_recall"] = report.per_class_recall;
  j["uar"] = report.uar;
  j["g_mean"] = report.g_mean;
  auto aucs = ordered_json::array();
  for (double a : report.per_class_auc) aucs.push_back(number_or_null(a));
  j["per_class_auc"] = aucs;
  j["avg_auc"] = number_or_null(report.avg_auc);
  auto cm = ordered_json::array();
  for (std::size_t t = 0; t < report.confusion.n_classes(); ++t) {
    auto row = ordered_json::array();
    for (std::size_t p = 0; p < report.confusion.n_classes(); ++p) row.push_back(report.confusion.at(t, p));
    cm.push_back(row);
  }
  j["confusion"] = cm;
  return j.dump(2);
}

void write_roc_csv(const MlpClassifier& model, const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "class,threshold,fpr,tpr\n";
  const auto probs = probability_matrix(model, data);
  const std::size_t c_count = model.n_classes();
  std::vector<double> scores(data.size());
  std::unique_ptr<bool[]> positives(new bool[data.size()]);
  char buf[96];
  for (std::size_t c = 0; c < c_count; ++c) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      scores[i] = probs[i * c_count + c];
      positives[i] = data.label(i) == c;
    }
    try {
      for (const auto& pt : roc_curve(scores, std::span<const bool>(positives.get(), data.size()))) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", c, pt.threshold, pt.fpr, pt.tpr);
        out << buf;
      }
    } catch (const UndefinedMetricError&) {
      log_warning("ROC undefined for class " + std::to_string(c));
    }
  }
}

}  // namespace imbassl
