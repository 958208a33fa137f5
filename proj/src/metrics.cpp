#include "tio/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "tio/errors.hpp"

namespace tio {

void validate(const DetectionOutcome& outcome) {
  if (outcome.scores.empty() || outcome.scores.size() != outcome.truths.size()) {
    throw Error(ErrorCode::LengthMismatch, "scores and truths must be non-empty and of equal length");
  }
  for (double s : outcome.scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::InvalidArgument, "scores must lie in [0, 1]");
  }
  for (int t : outcome.truths) {
    if (t != 0 && t != 1) throw Error(ErrorCode::InvalidArgument, "truths must be 0 or 1");
  }
}

ConfusionCounts confusion_counts(const DetectionOutcome& outcome, double theta) {
  validate(outcome);
  ConfusionCounts c;
  for (std::size_t l = 0; l < outcome.scores.size(); ++l) {
    const int predicted = outcome.scores[l] >= theta ? 1 : 0;
    const int truth = outcome.truths[l];
    c.tp += static_cast<std::size_t>(truth * predicted);
    c.tn += static_cast<std::size_t>((1 - truth) * (1 - predicted));
    c.fp += static_cast<std::size_t>((1 - truth) * predicted);
    c.fn += static_cast<std::size_t>(truth * (1 - predicted));
  }
  return c;
}

double precision(const ConfusionCounts& c) {
  const std::size_t predicted = c.tp + c.fp;
  return predicted == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(predicted);
}

double recall(const ConfusionCounts& c) {
  const std::size_t positives = c.tp + c.fn;
  return positives == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(positives);
}

std::vector<double> default_threshold_grid(const DetectionOutcome& outcome) {
  std::vector<double> grid = outcome.scores;
  grid.push_back(0.0);
  grid.push_back(1.0);
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

double average_precision(const DetectionOutcome& outcome, std::span<const double> thresholds) {
  validate(outcome);
  if (thresholds.empty()) throw Error(ErrorCode::EmptyGrid, "threshold grid is empty");
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double theta : thresholds) {
    const ConfusionCounts c = confusion_counts(outcome, theta);
    const double r = recall(c);
    ap += (r - prev_recall) * precision(c);
    prev_recall = r;
  }
  return ap;
}

double average_precision(const DetectionOutcome& outcome) {
  validate(outcome);
  const auto grid = default_threshold_grid(outcome);
  return average_precision(outcome, grid);
}

double auc(const DetectionOutcome& outcome) {
  validate(outcome);
  const auto positives = static_cast<std::size_t>(std::count(outcome.truths.begin(), outcome.truths.end(), 1));
  const std::size_t negatives = outcome.truths.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::DegenerateClasses, "AUC needs at least one positive and one negative");
  }
  // Sweep thresholds from above every score (origin) down to 0 (all positive).
  double area = 0.0;
  double prev_tpr = 0.0;
  double prev_fpr = 0.0;
  for (double theta : default_threshold_grid(outcome)) {
    const ConfusionCounts c = confusion_counts(outcome, theta);
    const double tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    const double fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
    area += (fpr - prev_fpr) * 0.5 * (tpr + prev_tpr);
    prev_tpr = tpr;
    prev_fpr = fpr;
  }
  return area;
}

RetrievalRanking rank_gallery(const Vector& query, std::span<const Vector> gallery) {
  if (gallery.empty()) throw Error(ErrorCode::InvalidArgument, "empty gallery");
  RetrievalRanking ranking;
  ranking.similarities.reserve(gallery.size());
  for (const Vector& item : gallery) {
    if (item.size() != query.size()) throw Error(ErrorCode::LengthMismatch, "gallery item width differs from query");
    ranking.similarities.push_back(-(query - item).norm());
  }
  ranking.relevance.assign(gallery.size(), 0);
  ranking.order.resize(gallery.size());
  std::iota(ranking.order.begin(), ranking.order.end(), 0);
  std::stable_sort(ranking.order.begin(), ranking.order.end(), [&](std::size_t a, std::size_t b) {
    return ranking.similarities[a] > ranking.similarities[b];
  });
  return ranking;
}

double recall_at_k(const RetrievalRanking& ranking, std::size_t k) {
  const std::size_t n = ranking.order.size();
  if (ranking.relevance.size() != n) throw Error(ErrorCode::LengthMismatch, "relevance does not match ranking");
  if (k == 0 || k > n) throw Error(ErrorCode::InvalidArgument, "k must lie in [1, N]");
  const auto total = static_cast<std::size_t>(std::count(ranking.relevance.begin(), ranking.relevance.end(), 1));
  if (total == 0) throw Error(ErrorCode::NoRelevantItems, "no relevant items for this query");
  std::size_t hits = 0;
  for (std::size_t r = 0; r < k; ++r) hits += ranking.relevance[ranking.order[r]] == 1 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::string format_metric_value(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricRow> rows) {
  out << "metric,name,value\n";
  for (const auto& row : rows) out << row.metric << ',' << row.name << ',' << format_metric_value(row.value) << '\n';
}

std::vector<MetricRow> read_metrics_csv(std::istream& in) {
  std::vector<MetricRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != "metric,name,value") {
    throw Error(ErrorCode::InvalidArgument, "missing metrics CSV header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto first = line.find(',');
    const auto second = line.find(',', first == std::string::npos ? first : first + 1);
    if (first == std::string::npos || second == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "malformed metrics row: " + line);
    }
    rows.push_back({line.substr(0, first), line.substr(first + 1, second - first - 1), std::stod(line.substr(second + 1))});
  }
  return rows;
}

}  // namespace tio
