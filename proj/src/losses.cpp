#include "tio/losses.hpp"

#include <algorithm>
#include <cmath>

#include "tio/errors.hpp"

namespace tio {

Classifier Classifier::zeros(std::size_t num_classes, std::size_t dim) {
  const auto c = static_cast<Eigen::Index>(num_classes);
  return {Matrix::Zero(c, static_cast<Eigen::Index>(dim)), Vector::Zero(c)};
}

Vector classify(const Vector& z, const Classifier& clf) {
  if (clf.weight.cols() != z.size() || clf.bias.size() != clf.weight.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "classifier does not match embedding width");
  }
  Vector logits = clf.weight * z + clf.bias;
  logits.array() -= logits.maxCoeff();
  Vector p = logits.array().exp();
  return p / p.sum();
}

double anomaly_score(const Vector& probs) {
  if (probs.size() < 1) throw Error(ErrorCode::InvalidArgument, "empty probability vector");
  return std::clamp(1.0 - probs[probs.size() - 1], 0.0, 1.0);
}

double cls_loss(std::span<const LabelledPrediction> batch) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "classification loss over an empty batch");
  double sum = 0.0;
  for (const auto& item : batch) {
    if (item.label >= static_cast<std::size_t>(item.probs.size())) {
      throw Error(ErrorCode::InvalidArgument, "label outside probability vector");
    }
    sum -= std::log(std::max(item.probs[static_cast<Eigen::Index>(item.label)], kProbabilityFloor));
  }
  return sum / static_cast<double>(batch.size());
}

double ret_loss(std::span<const RetrievalTriplet> triplets, double margin) {
  double sum = 0.0;
  for (const auto& t : triplets) {
    if (t.positive.size() != t.query.size() || t.negative.size() != t.query.size()) {
      throw Error(ErrorCode::LengthMismatch, "retrieval triplet widths differ");
    }
    const double d_pos = (t.query - t.positive).norm();
    const double d_neg = (t.query - t.negative).norm();
    sum += std::max(0.0, margin + d_pos - d_neg);
  }
  return sum;
}

GatLossResult gat_reg_loss(const AttentionReport& report, const EdgeSupervision& sup, double lambda) {
  auto clamp = [](double a) { return std::clamp(a, kProbabilityFloor, 1.0 - kProbabilityFloor); };
  GatLossResult out;
  for (const auto& [u, v] : sup.positives) {
    const auto alpha = report.alpha(u, v);
    if (!alpha) {
      throw Error(ErrorCode::InvalidArgument,
                  "positive pair (" + std::to_string(u) + ", " + std::to_string(v) + ") is not a graph edge");
    }
    out.loss -= std::log(clamp(*alpha));
  }
  for (const auto& [u, v] : sup.negatives) {
    const auto alpha = report.alpha(u, v);
    if (!alpha) {
      ++out.skipped_negatives;
      continue;
    }
    out.loss -= std::log(1.0 - clamp(*alpha));
  }
  out.loss *= lambda;
  return out;
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.lr0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "lr0 must be positive");
  if (!(cfg.decay_per_epoch > 0.0 && cfg.decay_per_epoch <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "decay_per_epoch must lie in (0, 1]");
  }
  if (!(cfg.margin_alpha >= 0.0)) throw Error(ErrorCode::InvalidArgument, "margin must be non-negative");
  if (!(cfg.sigma_kernel > 0.0) || !(cfg.sigma_time > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "kernel bandwidths must be positive");
  }
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0) || !(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0) ||
      !(cfg.adam_eps > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid Adam hyperparameters");
  }
}

double total_loss(double l_cls, double l_ret, double l_gat, const TrainConfig& cfg) {
  return cfg.w_cls * l_cls + cfg.w_ret * l_ret + cfg.w_gat * l_gat;
}

}  // namespace tio
