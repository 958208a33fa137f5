#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tio/types.hpp"

namespace tio {

struct DetectionOutcome {
  std::vector<double> scores;  // in [0, 1]
  std::vector<int> truths;     // 0 or 1
};

void validate(const DetectionOutcome& outcome);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  bool operator==(const ConfusionCounts&) const = default;
};

/// A segment is predicted positive when its score is >= theta.
ConfusionCounts confusion_counts(const DetectionOutcome& outcome, double theta);

double precision(const ConfusionCounts& c);  // 1 when nothing is predicted positive
double recall(const ConfusionCounts& c);     // 0 when there are no positives

/// Sorted unique scores together with 0 and 1, in descending order.
std::vector<double> default_threshold_grid(const DetectionOutcome& outcome);

/// sum_j (R(theta_j) - R(theta_{j-1})) * P(theta_j) over a descending grid,
/// starting from recall 0. The one-argument overload uses the default grid.
/// Throws EmptyGrid.
double average_precision(const DetectionOutcome& outcome, std::span<const double> thresholds);
double average_precision(const DetectionOutcome& outcome);

/// Trapezoidal area under TPR(FPR) over the full threshold sweep.
/// Throws DegenerateClasses when the truths hold a single class.
double auc(const DetectionOutcome& outcome);

struct RetrievalRanking {
  std::vector<double> similarities;
  std::vector<int> relevance;
  std::vector<std::size_t> order;  // gallery indices, most similar first
};

/// Similarity is the negative Euclidean distance; ties keep gallery order.
RetrievalRanking rank_gallery(const Vector& query, std::span<const Vector> gallery);

/// Throws NoRelevantItems, InvalidArgument when k is 0 or exceeds the gallery.
double recall_at_k(const RetrievalRanking& ranking, std::size_t k);

/// "metric,name,value" rows, value printed with 12 significant digits.
struct MetricRow {
  std::string metric;
  std::string name;
  double value = 0.0;
};

std::string format_metric_value(double value);
void write_metrics_csv(std::ostream& out, std::span<const MetricRow> rows);
std::vector<MetricRow> read_metrics_csv(std::istream& in);

}  // namespace tio
