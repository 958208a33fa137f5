#pragma once

#include <cstddef>
#include <random>

#include "tio/types.hpp"

namespace tio {

struct LayerNormParams {
  Vector gain;
  Vector bias;
  double eps = 1e-5;

  static LayerNormParams identity(std::size_t dim);
};

struct FeedForward {
  Matrix w1;  // d x d_hidden
  Vector b1;
  Matrix w2;  // d_hidden x d
  Vector b2;
};

/// Index-distance temporal block: fuse -> LN1 -> FFN + residual -> LN2.
/// No positional encoding; frame order enters only through the adjacency.
struct TemporalEncoder {
  double sigma_time = 3.0;
  FeedForward ffn;
  LayerNormParams ln1;
  LayerNormParams ln2;

  std::size_t dim() const { return static_cast<std::size_t>(ffn.w1.rows()); }
  std::size_t hidden() const { return static_cast<std::size_t>(ffn.w1.cols()); }

  /// Unit-gain layer norms, zero biases, FFN weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static TemporalEncoder init(std::size_t dim, std::size_t hidden, std::mt19937_64& rng, double sigma_time = 3.0);
};

struct TemporalMatrices {
  Matrix a_t;      // exp(-|i - j| / sigma)
  Matrix degree;   // diagonal row sums of a_t
  Matrix a_tilde;  // D^-1/2 A_t D^-1/2
};

TemporalMatrices build_temporal_adjacency(std::size_t num_frames, double sigma_time);

Matrix row_softmax(const Matrix& m);

/// rowsoftmax(A_tilde) * H. Throws ShapeMismatch.
Matrix fuse(const Matrix& frames, const TemporalMatrices& m);

Matrix layer_norm(const Matrix& x, const LayerNormParams& params);

/// LN2(ReLU(H W1 + b1) W2 + b2 + H). Throws ShapeMismatch.
Matrix ffn_residual(const Matrix& normed, const TemporalEncoder& enc);

struct TemporalOutput {
  Matrix frame_features;  // N x d
  Vector video_embedding; // mean of frame_features rows
};

TemporalOutput encode(const Matrix& frames, const TemporalEncoder& enc);

void validate(const TemporalEncoder& enc);

}  // namespace tio
