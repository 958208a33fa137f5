#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tio/gat.hpp"
#include "tio/graph.hpp"
#include "tio/types.hpp"

namespace tio {

struct Classifier {
  Matrix weight;  // C x d
  Vector bias;    // C

  static Classifier zeros(std::size_t num_classes, std::size_t dim);
  std::size_t num_classes() const { return static_cast<std::size_t>(weight.rows()); }
};

/// softmax(W z + b).
Vector classify(const Vector& z, const Classifier& clf);

/// 1 - p(non-violence), with the non-violence class last in `probs`.
double anomaly_score(const Vector& probs);

inline constexpr double kProbabilityFloor = 1e-12;

struct LabelledPrediction {
  Vector probs;
  std::size_t label = 0;
};

/// Mean negative log-likelihood of the true class. Throws EmptyBatch.
double cls_loss(std::span<const LabelledPrediction> batch);

struct RetrievalTriplet {
  Vector query;
  Vector positive;
  Vector negative;
};

/// Sum of max(0, margin + ||q - t+|| - ||q - t-||).
double ret_loss(std::span<const RetrievalTriplet> triplets, double margin);

struct EdgeSupervision {
  std::vector<std::pair<std::size_t, std::size_t>> positives;  // node index pairs
  std::vector<std::pair<std::size_t, std::size_t>> negatives;
};

struct GatLossResult {
  double loss = 0.0;
  std::size_t skipped_negatives = 0;  // pairs no softmax neighbourhood scores
};

/// lambda * (sum_{E+} -log alpha + sum_{E-} -log(1 - alpha)), alpha clamped to
/// [1e-12, 1 - 1e-12]. Positives must be scored pairs (throws InvalidArgument).
GatLossResult gat_reg_loss(const AttentionReport& report, const EdgeSupervision& sup, double lambda);

struct TrainConfig {
  double lr0 = 5e-5;
  double decay_per_epoch = 0.95;
  double margin_alpha = 0.9;
  double lambda_gat = 1.0;
  double w_cls = 1.4;
  double w_ret = 1.3;
  double w_gat = 1.0;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Videos per optimiser step; 0 means the whole training set.
  std::size_t batch_size = 0;
  double sigma_kernel = 0.25;
  double sigma_time = 3.0;
  /// 0 selects 2 * d.
  std::size_t d_hidden = 0;
  RelationPolicy relation_policy = RelationPolicy::All;
};

void validate(const TrainConfig& cfg);

struct LossReport {
  double l_cls = 0.0;
  double l_ret = 0.0;
  double l_gat = 0.0;
  double l_total = 0.0;
  std::size_t skipped_negatives = 0;
};

double total_loss(double l_cls, double l_ret, double l_gat, const TrainConfig& cfg);

}  // namespace tio
