#include "tio/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tio/errors.hpp"

namespace tio {

namespace {

constexpr std::uint64_t kInitStream = 0x9e3779b97f4a7c15ULL;

Eigen::Map<Matrix> view(Matrix& m) { return {m.data(), m.rows(), m.cols()}; }
Eigen::Map<Matrix> view(Vector& v) { return {v.data(), v.size(), 1}; }

// Gradient of a row-wise layer norm. `x` is the layer input; accumulates the
// gain/bias gradients and returns dL/dx.
Matrix layer_norm_backward(const Matrix& x, const LayerNormParams& params, const Matrix& dy, Vector& d_gain,
                           Vector& d_bias) {
  const auto d = x.cols();
  const double inv_d = 1.0 / static_cast<double>(d);
  Matrix dx(x.rows(), d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).sum() * inv_d;
    const Eigen::RowVectorXd centred = x.row(i).array() - mean;
    const double inv_std = 1.0 / std::sqrt(centred.squaredNorm() * inv_d + params.eps);
    const Eigen::RowVectorXd xhat = centred * inv_std;
    d_gain += dy.row(i).cwiseProduct(xhat).transpose();
    d_bias += dy.row(i).transpose();
    const Eigen::RowVectorXd dxhat = dy.row(i).cwiseProduct(params.gain.transpose());
    const double mean_dxhat = dxhat.sum() * inv_d;
    const double mean_dxhat_xhat = dxhat.dot(xhat) * inv_d;
    dx.row(i) = inv_std * (dxhat.array() - mean_dxhat - xhat.array() * mean_dxhat_xhat).matrix();
  }
  return dx;
}

double clamp_alpha(double a) { return std::clamp(a, kProbabilityFloor, 1.0 - kProbabilityFloor); }

std::size_t entry_index(const std::vector<AttentionEntry>& entries, std::size_t neighbor) {
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k].neighbor == neighbor) return k;
  }
  return entries.size();
}

}  // namespace

Model Model::init(std::size_t dim, std::size_t num_classes, const TrainConfig& cfg) {
  if (dim == 0 || num_classes < 2) throw Error(ErrorCode::InvalidArgument, "model needs dim >= 1 and >= 2 classes");
  const std::size_t hidden = cfg.d_hidden == 0 ? 2 * dim : cfg.d_hidden;
  std::mt19937_64 rng(cfg.seed ^ kInitStream);
  Model model;
  model.gat.sigma_kernel = cfg.sigma_kernel;
  model.gat.projection = Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  model.gat.activation = Activation::ReLU;
  model.temporal = TemporalEncoder::init(dim, hidden, rng, cfg.sigma_time);
  model.classifier = Classifier::zeros(num_classes, dim);
  return model;
}

void validate(const Model& model) {
  validate(model.temporal);
  validate(model.gat, model.dim());
  const auto& clf = model.classifier;
  if (clf.weight.cols() != static_cast<Eigen::Index>(model.dim()) || clf.bias.size() != clf.weight.rows() ||
      clf.weight.rows() < 2) {
    throw Error(ErrorCode::ShapeMismatch, "classifier shape does not match the model");
  }
  if (!clf.weight.allFinite() || !clf.bias.allFinite()) throw Error(ErrorCode::NonFiniteValue, "classifier not finite");
}

Gradients Gradients::zeros_like(const Model& model) {
  Gradients g;
  if (model.gat.projection) g.projection = Matrix::Zero(model.gat.projection->rows(), model.gat.projection->cols());
  const auto& ffn = model.temporal.ffn;
  g.w1 = Matrix::Zero(ffn.w1.rows(), ffn.w1.cols());
  g.b1 = Vector::Zero(ffn.b1.size());
  g.w2 = Matrix::Zero(ffn.w2.rows(), ffn.w2.cols());
  g.b2 = Vector::Zero(ffn.b2.size());
  g.ln1_gain = Vector::Zero(model.temporal.ln1.gain.size());
  g.ln1_bias = Vector::Zero(model.temporal.ln1.bias.size());
  g.ln2_gain = Vector::Zero(model.temporal.ln2.gain.size());
  g.ln2_bias = Vector::Zero(model.temporal.ln2.bias.size());
  g.cls_weight = Matrix::Zero(model.classifier.weight.rows(), model.classifier.weight.cols());
  g.cls_bias = Vector::Zero(model.classifier.bias.size());
  return g;
}

Gradients& Gradients::operator+=(const Gradients& o) {
  auto mine = gradient_blocks(*this);
  auto theirs = gradient_blocks(const_cast<Gradients&>(o));
  if (mine.size() != theirs.size()) throw Error(ErrorCode::ShapeMismatch, "gradient sets differ in layout");
  for (std::size_t b = 0; b < mine.size(); ++b) {
    if (mine[b].values.size() != theirs[b].values.size()) throw Error(ErrorCode::ShapeMismatch, "gradient block shape");
    mine[b].values += theirs[b].values;
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (auto& block : gradient_blocks(*this)) block.values *= s;
  return *this;
}

bool Gradients::all_finite() const {
  for (auto& block : gradient_blocks(const_cast<Gradients&>(*this))) {
    if (!block.values.allFinite()) return false;
  }
  return true;
}

std::vector<ParamBlock> trainable_blocks(Model& model) {
  std::vector<ParamBlock> out;
  if (model.gat.projection) out.push_back({"gat.projection", view(*model.gat.projection)});
  auto& t = model.temporal;
  out.push_back({"temporal.ffn.w1", view(t.ffn.w1)});
  out.push_back({"temporal.ffn.b1", view(t.ffn.b1)});
  out.push_back({"temporal.ffn.w2", view(t.ffn.w2)});
  out.push_back({"temporal.ffn.b2", view(t.ffn.b2)});
  out.push_back({"temporal.ln1.gain", view(t.ln1.gain)});
  out.push_back({"temporal.ln1.bias", view(t.ln1.bias)});
  out.push_back({"temporal.ln2.gain", view(t.ln2.gain)});
  out.push_back({"temporal.ln2.bias", view(t.ln2.bias)});
  out.push_back({"classifier.weight", view(model.classifier.weight)});
  out.push_back({"classifier.bias", view(model.classifier.bias)});
  return out;
}

std::vector<ParamBlock> gradient_blocks(Gradients& g) {
  std::vector<ParamBlock> out;
  if (g.projection.size() > 0) out.push_back({"gat.projection", view(g.projection)});
  out.push_back({"temporal.ffn.w1", view(g.w1)});
  out.push_back({"temporal.ffn.b1", view(g.b1)});
  out.push_back({"temporal.ffn.w2", view(g.w2)});
  out.push_back({"temporal.ffn.b2", view(g.b2)});
  out.push_back({"temporal.ln1.gain", view(g.ln1_gain)});
  out.push_back({"temporal.ln1.bias", view(g.ln1_bias)});
  out.push_back({"temporal.ln2.gain", view(g.ln2_gain)});
  out.push_back({"temporal.ln2.bias", view(g.ln2_bias)});
  out.push_back({"classifier.weight", view(g.cls_weight)});
  out.push_back({"classifier.bias", view(g.cls_bias)});
  return out;
}

VideoForward forward_video(const Model& model, const KnowledgeGraph& g) {
  if (g.num_frames == 0) throw Error(ErrorCode::EmptyGraph, "graph has no frame nodes");
  if (g.features.cols() != static_cast<Eigen::Index>(model.dim())) {
    throw Error(ErrorCode::DimensionMismatch, "graph features have width " + std::to_string(g.features.cols()) +
                                                  ", model expects " + std::to_string(model.dim()));
  }
  VideoForward f;
  f.report = attention(g, model.gat);
  f.frames = node_update(g, f.report, model.gat).topRows(static_cast<Eigen::Index>(g.num_frames));

  const auto& enc = model.temporal;
  const TemporalMatrices m = build_temporal_adjacency(g.num_frames, enc.sigma_time);
  f.mix = row_softmax(m.a_tilde);
  f.fused = f.mix * f.frames;
  f.ln1_out = layer_norm(f.fused, enc.ln1);
  f.hidden_pre = (f.ln1_out * enc.ffn.w1).rowwise() + enc.ffn.b1.transpose();
  f.residual_sum = ((f.hidden_pre.cwiseMax(0.0) * enc.ffn.w2).rowwise() + enc.ffn.b2.transpose()) + f.ln1_out;
  f.ln2_out = layer_norm(f.residual_sum, enc.ln2);
  f.z = f.ln2_out.colwise().mean().transpose();
  f.probs = classify(f.z, model.classifier);
  return f;
}

VideoInference infer_video(const Model& model, const KnowledgeGraph& g) {
  const VideoForward f = forward_video(model, g);
  VideoInference out;
  out.frame_scores.resize(f.ln2_out.rows());
  for (Eigen::Index t = 0; t < f.ln2_out.rows(); ++t) {
    out.frame_scores[t] = anomaly_score(classify(f.ln2_out.row(t).transpose(), model.classifier));
  }
  out.video_score = anomaly_score(f.probs);
  out.video_embedding = f.z;
  out.probs = f.probs;
  return out;
}

namespace {

// Shared forward/backward driver. When `grads` is null only the loss is formed.
LossReport run_batch(const Model& model, std::span<const BatchItem> batch, const TrainConfig& cfg, Gradients* grads) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "empty training batch");
  validate(model);
  LossReport report;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const auto& enc = model.temporal;
  const auto& clf = model.classifier;

  for (const BatchItem& item : batch) {
    if (item.graph == nullptr) throw Error(ErrorCode::InvalidArgument, "batch item without a graph");
    const KnowledgeGraph& g = *item.graph;
    const VideoForward f = forward_video(model, g);
    if (item.label >= model.num_classes()) throw Error(ErrorCode::InvalidArgument, "label out of range");

    // Classification.
    const double p_true = f.probs[static_cast<Eigen::Index>(item.label)];
    report.l_cls -= std::log(std::max(p_true, kProbabilityFloor)) * inv_batch;

    // Retrieval hinge.
    const Vector to_pos = f.z - item.positive;
    const Vector to_neg = f.z - item.negative;
    const double d_pos = to_pos.norm();
    const double d_neg = to_neg.norm();
    const double hinge = cfg.margin_alpha + d_pos - d_neg;
    if (hinge > 0.0) report.l_ret += hinge;

    // Attention regulariser.
    const GatLossResult gat_loss = gat_reg_loss(f.report, item.supervision, cfg.lambda_gat);
    report.l_gat += gat_loss.loss;
    report.skipped_negatives += gat_loss.skipped_negatives;

    if (grads == nullptr) continue;
    Gradients& G = *grads;

    // dL/dz from both heads.
    Vector d_logits = f.probs;
    if (p_true >= kProbabilityFloor) {
      d_logits[static_cast<Eigen::Index>(item.label)] -= 1.0;
      d_logits *= cfg.w_cls * inv_batch;
    } else {
      d_logits.setZero();
    }
    G.cls_weight += d_logits * f.z.transpose();
    G.cls_bias += d_logits;
    Vector dz = clf.weight.transpose() * d_logits;
    if (hinge > 0.0) {
      if (d_pos > 0.0) dz += cfg.w_ret * to_pos / d_pos;
      if (d_neg > 0.0) dz -= cfg.w_ret * to_neg / d_neg;
    }

    // Temporal block, last to first.
    const auto n = f.ln2_out.rows();
    const Matrix d_ln2 = (Vector::Ones(n) * dz.transpose()) / static_cast<double>(n);
    const Matrix d_sum = layer_norm_backward(f.residual_sum, enc.ln2, d_ln2, G.ln2_gain, G.ln2_bias);
    const Matrix hidden = f.hidden_pre.cwiseMax(0.0);
    G.b2 += d_sum.colwise().sum().transpose();
    G.w2 += hidden.transpose() * d_sum;
    const Matrix d_hidden = (d_sum * enc.ffn.w2.transpose()).cwiseProduct(
        (f.hidden_pre.array() > 0.0).cast<double>().matrix());
    G.w1 += f.ln1_out.transpose() * d_hidden;
    G.b1 += d_hidden.colwise().sum().transpose();
    const Matrix d_ln1 = d_sum + d_hidden * enc.ffn.w1.transpose();
    const Matrix d_fused = layer_norm_backward(f.fused, enc.ln1, d_ln1, G.ln1_gain, G.ln1_bias);
    const Matrix d_frames = f.mix.transpose() * d_fused;

    if (!model.gat.projection) continue;  // attention has no parameters

    // dL/d alpha, per node entry.
    std::vector<std::vector<double>> d_alpha(g.num_nodes());
    for (std::size_t u = 0; u < g.num_nodes(); ++u) d_alpha[u].assign(f.report.per_node[u].size(), 0.0);

    const double gat_scale = cfg.w_gat * cfg.lambda_gat;
    for (const auto& [u, v] : item.supervision.positives) {
      const auto& entries = f.report.per_node.at(u);
      const std::size_t k = entry_index(entries, v);
      const double a = entries[k].alpha;
      if (clamp_alpha(a) == a) d_alpha[u][k] -= gat_scale / a;
    }
    for (const auto& [u, v] : item.supervision.negatives) {
      if (u >= g.num_nodes()) continue;
      const auto& entries = f.report.per_node[u];
      const std::size_t k = entry_index(entries, v);
      if (k == entries.size()) continue;
      const double a = entries[k].alpha;
      if (clamp_alpha(a) == a) d_alpha[u][k] += gat_scale / (1.0 - a);
    }

    // Node update for frame rows: h'_u = act(sum_k alpha_k h_k).
    for (std::size_t u = 0; u < g.num_frames; ++u) {
      const auto& entries = f.report.per_node[u];
      if (entries.empty()) continue;
      Eigen::RowVectorXd pre = Eigen::RowVectorXd::Zero(g.features.cols());
      for (const auto& e : entries) pre += e.alpha * g.features.row(static_cast<Eigen::Index>(e.neighbor));
      Eigen::RowVectorXd d_pre = d_frames.row(static_cast<Eigen::Index>(u));
      if (model.gat.activation == Activation::ReLU) d_pre = d_pre.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
      for (std::size_t k = 0; k < entries.size(); ++k) {
        d_alpha[u][k] += d_pre.dot(g.features.row(static_cast<Eigen::Index>(entries[k].neighbor)));
      }
    }

    // Softmax over neighbours, then kernel, normalisation and distance.
    const std::size_t num_edges = g.edges.size();
    std::vector<double> d_weight(num_edges, 0.0);
    for (std::size_t u = 0; u < g.num_nodes(); ++u) {
      const auto& entries = f.report.per_node[u];
      double mean_grad = 0.0;
      for (std::size_t k = 0; k < entries.size(); ++k) mean_grad += entries[k].alpha * d_alpha[u][k];
      for (std::size_t k = 0; k < entries.size(); ++k) {
        d_weight[entries[k].edge] += entries[k].alpha * (d_alpha[u][k] - mean_grad);
      }
    }
    const double inv_sigma2 = 1.0 / (model.gat.sigma_kernel * model.gat.sigma_kernel);
    const auto& dist = f.report.edge_distance;
    const double d_min = dist[f.report.argmin_edge];
    const double d_max = dist[f.report.argmax_edge];
    const double range = d_max - d_min;
    if (!(range > 0.0)) continue;  // constant normalised distances
    std::vector<double> d_dist(num_edges, 0.0);
    double d_dmin = 0.0;
    double d_dmax = 0.0;
    for (std::size_t e = 0; e < num_edges; ++e) {
      const double dn = f.report.edge_normalized[e];
      const double d_norm = d_weight[e] * f.report.edge_weight[e] * (-2.0 * dn * inv_sigma2);
      d_dist[e] += d_norm / range;
      d_dmin += d_norm * (dist[e] - d_max) / (range * range);
      d_dmax -= d_norm * (dist[e] - d_min) / (range * range);
    }
    d_dist[f.report.argmin_edge] += d_dmin;
    d_dist[f.report.argmax_edge] += d_dmax;

    const Matrix& P = *model.gat.projection;
    for (std::size_t e = 0; e < num_edges; ++e) {
      if (d_dist[e] == 0.0) continue;
      const Vector diff = (g.features.row(static_cast<Eigen::Index>(g.edges[e].head)) -
                           g.features.row(static_cast<Eigen::Index>(g.edges[e].tail)))
                              .transpose();
      G.projection += (2.0 * d_dist[e]) * (P * diff) * diff.transpose();
    }
  }

  report.l_total = total_loss(report.l_cls, report.l_ret, report.l_gat, cfg);
  return report;
}

}  // namespace

LossReport evaluate_loss(const Model& model, std::span<const BatchItem> batch, const TrainConfig& cfg) {
  return run_batch(model, batch, cfg, nullptr);
}

GradientResult compute_gradients(const Model& model, std::span<const BatchItem> batch, const TrainConfig& cfg) {
  GradientResult out{Gradients::zeros_like(model), {}};
  out.loss = run_batch(model, batch, cfg, &out.grads);
  if (!out.grads.all_finite() || !std::isfinite(out.loss.l_total)) {
    throw Error(ErrorCode::NonFiniteGradient, "non-finite loss or gradient");
  }
  return out;
}

AdamState AdamState::for_model(const Model& model) {
  return {Gradients::zeros_like(model), Gradients::zeros_like(model), 0};
}

void adam_step(Model& model, const Gradients& grads, AdamState& state, double lr, const TrainConfig& cfg) {
  auto params = trainable_blocks(model);
  auto g = gradient_blocks(const_cast<Gradients&>(grads));
  auto m = gradient_blocks(state.m);
  auto v = gradient_blocks(state.v);
  if (params.size() != g.size() || params.size() != m.size() || params.size() != v.size()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match the model");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].values.rows() != g[b].values.rows() || params[b].values.cols() != g[b].values.cols() ||
        params[b].values.size() != m[b].values.size() || params[b].values.size() != v[b].values.size()) {
      throw Error(ErrorCode::ShapeMismatch, std::string("shape mismatch in block ") + std::string(params[b].name));
    }
  }
  ++state.step;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t b = 0; b < params.size(); ++b) {
    m[b].values = b1 * m[b].values + (1.0 - b1) * g[b].values;
    v[b].values = b2 * v[b].values + (1.0 - b2) * g[b].values.cwiseProduct(g[b].values);
    const Matrix m_hat = m[b].values / correction1;
    const Matrix v_hat = v[b].values / correction2;
    params[b].values -= lr * (m_hat.array() / (v_hat.array().sqrt() + cfg.adam_eps)).matrix();
  }
}

EdgeSupervision make_edge_supervision(const KnowledgeGraph& g, std::mt19937_64& rng) {
  EdgeSupervision sup;
  for (const Edge& e : g.edges) sup.positives.emplace_back(e.head, e.tail);
  if (g.num_frames < 2 || g.edges.empty()) return sup;
  std::uniform_int_distribution<std::size_t> pick_frame(0, g.num_frames - 1);
  std::uniform_int_distribution<std::size_t> pick_edge(0, g.edges.size() - 1);
  // Rejection sampling; bounded so a graph whose objects all sit in one frame terminates.
  const std::size_t wanted = sup.positives.size();
  for (std::size_t attempts = 0; sup.negatives.size() < wanted && attempts < 64 * wanted; ++attempts) {
    const std::size_t frame = pick_frame(rng);
    const std::size_t object = g.edges[pick_edge(rng)].tail;
    if (g.nodes[object].frame_index == g.nodes[frame].frame_index) continue;
    sup.negatives.emplace_back(frame, object);
  }
  return sup;
}

TrainResult train(const EmbeddingBundle& bundle, const TrainConfig& cfg) {
  validate(cfg);
  if (bundle.num_classes() < 2) throw Error(ErrorCode::InsufficientClasses, "training needs at least two classes");
  validate(bundle);

  TrainResult result{Model::init(bundle.dim, bundle.num_classes(), cfg), {}};
  if (cfg.epochs == 0) return result;
  if (bundle.videos.empty()) throw Error(ErrorCode::EmptyBatch, "bundle has no videos");

  std::vector<std::vector<std::size_t>> keywords_by_class(bundle.num_classes());
  for (std::size_t j = 0; j < bundle.keywords.size(); ++j) {
    keywords_by_class[bundle.keywords[j].source_label_index].push_back(j);
  }
  for (std::size_t c = 0; c < bundle.num_classes(); ++c) {
    if (keywords_by_class[c].empty()) {
      throw Error(ErrorCode::InvalidArgument, "class " + bundle.class_names[c] + " has no keyword to retrieve");
    }
  }

  std::vector<KnowledgeGraph> graphs;
  graphs.reserve(bundle.videos.size());
  for (std::size_t v = 0; v < bundle.videos.size(); ++v) graphs.push_back(build_graph(bundle, v, cfg.relation_policy));

  std::mt19937_64 rng(cfg.seed);
  AdamState adam = AdamState::for_model(result.model);
  const std::size_t num_videos = bundle.videos.size();
  const std::size_t batch_size = cfg.batch_size == 0 ? num_videos : std::min(cfg.batch_size, num_videos);
  std::vector<std::size_t> order(num_videos);
  std::iota(order.begin(), order.end(), 0);

  auto pick = [&](const std::vector<std::size_t>& from) {
    return from[std::uniform_int_distribution<std::size_t>(0, from.size() - 1)(rng)];
  };

  double lr = cfg.lr0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (epoch > 1) lr *= cfg.decay_per_epoch;
    std::shuffle(order.begin(), order.end(), rng);

    EpochRecord record{epoch, lr, {}};
    for (std::size_t start = 0; start < num_videos; start += batch_size) {
      const std::size_t stop = std::min(start + batch_size, num_videos);
      std::vector<BatchItem> batch;
      batch.reserve(stop - start);
      for (std::size_t s = start; s < stop; ++s) {
        const std::size_t v = order[s];
        const std::size_t label = bundle.videos[v].label_index;
        std::vector<std::size_t> others;
        for (std::size_t j = 0; j < bundle.keywords.size(); ++j) {
          if (bundle.keywords[j].source_label_index != label) others.push_back(j);
        }
        BatchItem item;
        item.graph = &graphs[v];
        item.label = label;
        item.positive = bundle.keywords[pick(keywords_by_class[label])].embedding;
        item.negative = bundle.keywords[pick(others)].embedding;
        item.supervision = make_edge_supervision(graphs[v], rng);
        batch.push_back(std::move(item));
      }

      const GradientResult step = compute_gradients(result.model, batch, cfg);
      adam_step(result.model, step.grads, adam, lr, cfg);

      const double share = static_cast<double>(batch.size()) / static_cast<double>(num_videos);
      record.loss.l_cls += step.loss.l_cls * share;
      record.loss.l_ret += step.loss.l_ret;
      record.loss.l_gat += step.loss.l_gat;
      record.loss.skipped_negatives += step.loss.skipped_negatives;
    }
    record.loss.l_total = total_loss(record.loss.l_cls, record.loss.l_ret, record.loss.l_gat, cfg);
    result.history.push_back(record);
  }
  return result;
}

}  // namespace tio
