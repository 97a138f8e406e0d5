#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "imbassl/model.hpp"

namespace imbassl {

class Dataset;

// counts[true][predicted]
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes) : n_(n_classes), counts_(n_classes * n_classes, 0) {}

  std::size_t n_classes() const { return n_; }
  std::size_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * n_ + predicted]; }
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  std::size_t row_sum(std::size_t truth) const;
  std::size_t total() const;

 private:
  std::size_t n_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> preds, std::span<const std::size_t> labels,
                                 std::size_t n_classes);

// Recall per true class; a class with no samples gets 0 (with a warning).
std::vector<double> per_class_recall(const ConfusionMatrix& cm);
double uar(const ConfusionMatrix& cm);
// C-th root of the product of per-class recalls; exactly 0 if any recall is 0.
double g_mean(const ConfusionMatrix& cm);

struct RocPoint {
  double threshold;  // predict positive when score >= threshold
  double fpr;
  double tpr;
};

// Threshold sweep from +inf down through every distinct score.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const bool> positives);

// Trapezoidal area under roc_curve; tied scores contribute a diagonal
// segment, so the result equals the Mann-Whitney statistic
// P(s+ > s−) + ½P(s+ = s−). Throws UndefinedMetricError without both classes.
double roc_auc(std::span<const double> scores, std::span<const bool> positives);

struct MetricsReport {
  ConfusionMatrix confusion{0};
  std::vector<double> per_class_recall;
  double uar = 0.0;
  double g_mean = 0.0;
  // NaN where one-vs-rest AUC is undefined (class absent from the data).
  std::vector<double> per_class_auc;
  double avg_auc = 0.0;
};

// probs is N×C row-major.
MetricsReport evaluate_probabilities(std::span<const double> probs, std::span<const std::size_t> labels,
                                     std::size_t n_classes);
MetricsReport evaluate(const MlpClassifier& model, const Dataset& data);

std::string report_to_json(const MetricsReport& report);

// CSV `class,threshold,fpr,tpr`, one-vs-rest curve per class.
void write_roc_csv(const MlpClassifier& model, const Dataset& data, const std::filesystem::path& path);

}  // namespace imbassl
