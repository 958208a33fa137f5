#include "tio/gat.hpp"

#include <algorithm>
#include <cmath>

#include "tio/errors.hpp"

namespace tio {

std::optional<double> AttentionReport::alpha(std::size_t u, std::size_t v) const {
  if (u >= per_node.size()) return std::nullopt;
  for (const auto& entry : per_node[u]) {
    if (entry.neighbor == v) return entry.alpha;
  }
  return std::nullopt;
}

double pairwise_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "vectors of length " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    sum += diff * diff;
  }
  return sum;
}

double pairwise_distance(const Vector& a, const Vector& b) {
  return pairwise_distance(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                           std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

std::vector<double> normalize_distances(std::span<const double> distances) {
  if (distances.empty()) throw Error(ErrorCode::EmptyEdgeSet, "cannot normalise an empty edge set");
  const auto [lo, hi] = std::minmax_element(distances.begin(), distances.end());
  const double d_min = *lo;
  const double range = *hi - d_min;
  std::vector<double> out(distances.size(), 0.0);
  if (range > 0.0) {
    for (std::size_t e = 0; e < distances.size(); ++e) out[e] = (distances[e] - d_min) / range;
  }
  return out;
}

std::vector<double> kernel_weights(std::span<const double> normalized, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "kernel bandwidth must be positive");
  const double inv_sigma2 = 1.0 / (sigma * sigma);
  std::vector<double> out(normalized.size());
  for (std::size_t e = 0; e < normalized.size(); ++e) out[e] = std::exp(-normalized[e] * normalized[e] * inv_sigma2);
  return out;
}

void validate(const GatLayer& layer, std::size_t dim) {
  if (!(layer.sigma_kernel > 0.0) || !std::isfinite(layer.sigma_kernel)) {
    throw Error(ErrorCode::InvalidArgument, "sigma_kernel must be positive and finite");
  }
  if (layer.projection) {
    const auto d = static_cast<Eigen::Index>(dim);
    if (layer.projection->rows() != d || layer.projection->cols() != d) {
      throw Error(ErrorCode::ShapeMismatch, "projection must be d x d");
    }
    if (!layer.projection->allFinite()) throw Error(ErrorCode::NonFiniteValue, "projection is not finite");
  }
}

AttentionReport attention(const KnowledgeGraph& g, const GatLayer& layer) {
  if (g.num_nodes() == 0) throw Error(ErrorCode::EmptyGraph, "graph has no nodes");
  validate(layer, static_cast<std::size_t>(g.features.cols()));

  AttentionReport report;
  report.per_node.resize(g.num_nodes());
  if (g.edges.empty()) return report;

  report.edge_distance.resize(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const Vector diff = (g.features.row(static_cast<Eigen::Index>(g.edges[e].head)) -
                         g.features.row(static_cast<Eigen::Index>(g.edges[e].tail)))
                            .transpose();
    report.edge_distance[e] = layer.projection ? (*layer.projection * diff).squaredNorm() : diff.squaredNorm();
  }
  const auto& dist = report.edge_distance;
  report.argmin_edge = static_cast<std::size_t>(std::min_element(dist.begin(), dist.end()) - dist.begin());
  report.argmax_edge = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
  report.edge_normalized = normalize_distances(dist);
  report.edge_weight = kernel_weights(report.edge_normalized, layer.sigma_kernel);

  for (std::size_t u = 0; u < g.num_nodes(); ++u) {
    const auto& incident = g.incident_edges[u];
    if (incident.empty()) continue;
    // Scores lie in (0, 1], so the plain exponential cannot overflow.
    double total = 0.0;
    auto& entries = report.per_node[u];
    entries.reserve(incident.size());
    for (std::size_t e : incident) {
      const Edge& edge = g.edges[e];
      AttentionEntry entry;
      entry.neighbor = edge.head == u ? edge.tail : edge.head;
      entry.relations = edge.relations;
      entry.edge = e;
      entry.distance = report.edge_distance[e];
      entry.normalized = report.edge_normalized[e];
      entry.weight = report.edge_weight[e];
      entry.alpha = std::exp(entry.weight);
      total += entry.alpha;
      entries.push_back(std::move(entry));
    }
    for (auto& entry : entries) entry.alpha /= total;
  }
  return report;
}

Matrix node_update(const KnowledgeGraph& g, const AttentionReport& report, const GatLayer& layer) {
  Matrix out = g.features;
  for (std::size_t u = 0; u < g.num_nodes(); ++u) {
    const auto& entries = report.per_node.at(u);
    if (entries.empty()) continue;
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(g.features.cols());
    for (const auto& entry : entries) acc += entry.alpha * g.features.row(static_cast<Eigen::Index>(entry.neighbor));
    if (layer.activation == Activation::ReLU) acc = acc.cwiseMax(0.0);
    out.row(static_cast<Eigen::Index>(u)) = acc;
  }
  return out;
}

Matrix refine_frames(const KnowledgeGraph& g, const GatLayer& layer) {
  if (g.num_frames == 0) throw Error(ErrorCode::EmptyGraph, "graph has no frame nodes");
  const Matrix refined = node_update(g, attention(g, layer), layer);
  return refined.topRows(static_cast<Eigen::Index>(g.num_frames));
}

std::vector<Matrix> multihead_baseline_attention(const Matrix& features, const MultiHeadBaseline& baseline) {
  if (baseline.w_query.empty() || baseline.w_query.size() != baseline.w_key.size()) {
    throw Error(ErrorCode::ShapeMismatch, "need matching, non-empty query/key projections");
  }
  std::vector<Matrix> scores;
  scores.reserve(baseline.num_heads());
  for (std::size_t h = 0; h < baseline.num_heads(); ++h) {
    const Matrix& wq = baseline.w_query[h];
    const Matrix& wk = baseline.w_key[h];
    if (wq.cols() != features.cols() || wk.cols() != features.cols() || wq.rows() != wk.rows() || wq.rows() < 1) {
      throw Error(ErrorCode::ShapeMismatch, "head " + std::to_string(h) + " projections do not match input width");
    }
    const Matrix q = features * wq.transpose();  // N x d_h
    const Matrix k = features * wk.transpose();
    scores.push_back(q * k.transpose());
  }
  return scores;
}

}  // namespace tio
