#include "tio/temporal.hpp"

#include <cmath>
#include <cstdlib>

#include "tio/errors.hpp"

namespace tio {

LayerNormParams LayerNormParams::identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {Vector::Ones(d), Vector::Zero(d), 1e-5};
}

TemporalEncoder TemporalEncoder::init(std::size_t dim, std::size_t hidden, std::mt19937_64& rng, double sigma_time) {
  const auto d = static_cast<Eigen::Index>(dim);
  const auto h = static_cast<Eigen::Index>(hidden);
  auto uniform = [&](Eigen::Index rows, Eigen::Index cols, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    // Row-major fill so the draw order does not depend on Eigen's storage order.
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    }
    return m;
  };
  TemporalEncoder enc;
  enc.sigma_time = sigma_time;
  enc.ffn.w1 = uniform(d, h, 1.0 / std::sqrt(static_cast<double>(dim)));
  enc.ffn.b1 = Vector::Zero(h);
  enc.ffn.w2 = uniform(h, d, 1.0 / std::sqrt(static_cast<double>(hidden)));
  enc.ffn.b2 = Vector::Zero(d);
  enc.ln1 = LayerNormParams::identity(dim);
  enc.ln2 = LayerNormParams::identity(dim);
  return enc;
}

void validate(const TemporalEncoder& enc) {
  if (!(enc.sigma_time > 0.0) || !std::isfinite(enc.sigma_time)) {
    throw Error(ErrorCode::InvalidArgument, "sigma_time must be positive and finite");
  }
  const auto d = enc.ffn.w1.rows();
  const auto h = enc.ffn.w1.cols();
  if (d < 1 || h < 1 || enc.ffn.b1.size() != h || enc.ffn.w2.rows() != h || enc.ffn.w2.cols() != d ||
      enc.ffn.b2.size() != d || enc.ln1.gain.size() != d || enc.ln1.bias.size() != d || enc.ln2.gain.size() != d ||
      enc.ln2.bias.size() != d) {
    throw Error(ErrorCode::ShapeMismatch, "temporal encoder parameters have inconsistent shapes");
  }
  const bool finite = enc.ffn.w1.allFinite() && enc.ffn.b1.allFinite() && enc.ffn.w2.allFinite() &&
                      enc.ffn.b2.allFinite() && enc.ln1.gain.allFinite() && enc.ln1.bias.allFinite() &&
                      enc.ln2.gain.allFinite() && enc.ln2.bias.allFinite();
  if (!finite) throw Error(ErrorCode::NonFiniteValue, "temporal encoder parameters are not finite");
}

TemporalMatrices build_temporal_adjacency(std::size_t num_frames, double sigma_time) {
  if (num_frames == 0) throw Error(ErrorCode::InvalidArgument, "need at least one frame");
  if (!(sigma_time > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_time must be positive");
  const auto n = static_cast<Eigen::Index>(num_frames);
  TemporalMatrices m;
  m.a_t.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m.a_t(i, j) = std::exp(-static_cast<double>(std::abs(i - j)) / sigma_time);
  }
  const Vector degree = m.a_t.rowwise().sum();
  m.degree = degree.asDiagonal();
  const Vector inv_sqrt = degree.array().rsqrt();
  m.a_tilde = inv_sqrt.asDiagonal() * m.a_t * inv_sqrt.asDiagonal();
  return m;
}

Matrix row_softmax(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double peak = m.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (m.row(i).array() - peak).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

Matrix fuse(const Matrix& frames, const TemporalMatrices& m) {
  if (m.a_tilde.rows() != frames.rows() || m.a_tilde.cols() != frames.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "temporal adjacency does not match frame count");
  }
  return row_softmax(m.a_tilde) * frames;
}

Matrix layer_norm(const Matrix& x, const LayerNormParams& params) {
  if (params.gain.size() != x.cols() || params.bias.size() != x.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "layer-norm parameters do not match feature width");
  }
  Matrix out(x.rows(), x.cols());
  const double inv_d = 1.0 / static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).sum() * inv_d;
    const Eigen::RowVectorXd centred = x.row(i).array() - mean;
    const double var = centred.squaredNorm() * inv_d;
    const double inv_std = 1.0 / std::sqrt(var + params.eps);
    out.row(i) = (centred * inv_std).cwiseProduct(params.gain.transpose()) + params.bias.transpose();
  }
  return out;
}

Matrix ffn_residual(const Matrix& normed, const TemporalEncoder& enc) {
  if (normed.cols() != enc.ffn.w1.rows()) throw Error(ErrorCode::ShapeMismatch, "FFN input width mismatch");
  const Matrix hidden = ((normed * enc.ffn.w1).rowwise() + enc.ffn.b1.transpose()).cwiseMax(0.0);
  const Matrix out = (hidden * enc.ffn.w2).rowwise() + enc.ffn.b2.transpose();
  return layer_norm(out + normed, enc.ln2);
}

TemporalOutput encode(const Matrix& frames, const TemporalEncoder& enc) {
  if (frames.rows() < 1) throw Error(ErrorCode::InvalidArgument, "need at least one frame");
  validate(enc);
  if (frames.cols() != static_cast<Eigen::Index>(enc.dim())) throw Error(ErrorCode::ShapeMismatch, "frame width mismatch");
  const TemporalMatrices m = build_temporal_adjacency(static_cast<std::size_t>(frames.rows()), enc.sigma_time);
  TemporalOutput out;
  out.frame_features = ffn_residual(layer_norm(fuse(frames, m), enc.ln1), enc);
  out.video_embedding = out.frame_features.colwise().mean().transpose();
  return out;
}

}  // namespace tio
