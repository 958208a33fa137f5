// End-to-end model: distance-kernel GAT -> temporal encoder -> classifier,
// with hand-derived reverse-mode gradients of the weighted total loss.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "tio/bundle.hpp"
#include "tio/gat.hpp"
#include "tio/graph.hpp"
#include "tio/losses.hpp"
#include "tio/temporal.hpp"
#include "tio/types.hpp"

namespace tio {

struct Model {
  GatLayer gat;
  TemporalEncoder temporal;
  Classifier classifier;

  std::size_t dim() const { return temporal.dim(); }
  std::size_t num_classes() const { return classifier.num_classes(); }

  /// Identity projection, seeded FFN weights, unit layer norms and a zero
  /// classifier (so an untrained model predicts the uniform distribution).
  static Model init(std::size_t dim, std::size_t num_classes, const TrainConfig& cfg);
};

void validate(const Model& model);

/// Same layout as the trainable parameters of a Model. `projection` is empty
/// when the model has no projection.
struct Gradients {
  Matrix projection;
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  Vector ln1_gain;
  Vector ln1_bias;
  Vector ln2_gain;
  Vector ln2_bias;
  Matrix cls_weight;
  Vector cls_bias;

  static Gradients zeros_like(const Model& model);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
  bool all_finite() const;
};

/// A named view of one parameter tensor (column-major, rows x cols).
struct ParamBlock {
  std::string_view name;
  Eigen::Map<Matrix> values;
};

/// Trainable tensors in a fixed order; both functions agree on names and shapes.
std::vector<ParamBlock> trainable_blocks(Model& model);
std::vector<ParamBlock> gradient_blocks(Gradients& grads);

/// Intermediate values of one video's forward pass.
struct VideoForward {
  AttentionReport report;
  Matrix frames;        // GAT-refined frame rows, N x d
  Matrix mix;           // rowsoftmax(A_tilde)
  Matrix fused;         // mix * frames
  Matrix ln1_out;
  Matrix hidden_pre;    // ln1_out W1 + b1
  Matrix residual_sum;  // ReLU(hidden_pre) W2 + b2 + ln1_out
  Matrix ln2_out;       // frame features H'''
  Vector z;
  Vector probs;
};

VideoForward forward_video(const Model& model, const KnowledgeGraph& g);

struct VideoInference {
  Vector frame_scores;  // anomaly score per frame row of H'''
  double video_score = 0.0;
  Vector video_embedding;
  Vector probs;
};

VideoInference infer_video(const Model& model, const KnowledgeGraph& g);

struct BatchItem {
  const KnowledgeGraph* graph = nullptr;
  std::size_t label = 0;
  Vector positive;  // retrieval target of the video's class
  Vector negative;  // retrieval target of another class
  EdgeSupervision supervision;
};

/// Loss without gradients.
LossReport evaluate_loss(const Model& model, std::span<const BatchItem> batch, const TrainConfig& cfg);

struct GradientResult {
  Gradients grads;
  LossReport loss;
};

/// Exact gradients of l_total w.r.t. every trainable tensor.
/// Throws NonFiniteGradient if any component is NaN or infinite.
GradientResult compute_gradients(const Model& model, std::span<const BatchItem> batch, const TrainConfig& cfg);

struct AdamState {
  Gradients m;
  Gradients v;
  std::uint64_t step = 0;

  static AdamState for_model(const Model& model);
};

/// Bias-corrected Adam update in place. Throws ShapeMismatch.
void adam_step(Model& model, const Gradients& grads, AdamState& state, double lr, const TrainConfig& cfg);

/// E+ = every frame/object edge; E- = as many frame/object pairs drawn
/// uniformly (with replacement) from different frames.
EdgeSupervision make_edge_supervision(const KnowledgeGraph& g, std::mt19937_64& rng);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  LossReport loss;
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> history;
};

/// Throws InsufficientClasses when the bundle has fewer than two classes.
TrainResult train(const EmbeddingBundle& bundle, const TrainConfig& cfg);

}  // namespace tio
