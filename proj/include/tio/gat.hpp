// Distance-kernel graph attention.
//
// For every edge (u, v):  d = ||P h_u - P h_v||^2            (P = I when absent)
//                         d' = (d - d_min) / (d_max - d_min)  over the graph's edges
//                         w = exp(-d'^2 / sigma^2)
// Attention is the softmax of w over the neighbours of u, and the refined
// feature is h'_u = act(sum_v alpha_uv h_v). There is no query/key term.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tio/graph.hpp"
#include "tio/types.hpp"

namespace tio {

enum class Activation { ReLU, Identity };

struct GatLayer {
  double sigma_kernel = 0.25;
  /// Optional d x d projection applied before distances. Absent in the
  /// parameter-free mode; the trainer enables it (initialised to identity).
  std::optional<Matrix> projection;
  Activation activation = Activation::ReLU;
};

struct AttentionEntry {
  std::size_t neighbor = 0;
  std::vector<std::size_t> relations;
  std::size_t edge = 0;
  double distance = 0.0;
  double normalized = 0.0;
  double weight = 0.0;
  double alpha = 0.0;
};

struct AttentionReport {
  /// Indexed by node; entries follow KnowledgeGraph::incident_edges order.
  std::vector<std::vector<AttentionEntry>> per_node;
  /// Per distinct edge, in KnowledgeGraph::edges order.
  std::vector<double> edge_distance;
  std::vector<double> edge_normalized;
  std::vector<double> edge_weight;
  std::size_t argmin_edge = 0;
  std::size_t argmax_edge = 0;

  /// alpha assigned by u's softmax to neighbour v, if v is in N(u).
  std::optional<double> alpha(std::size_t u, std::size_t v) const;
};

/// Squared Euclidean distance. Throws LengthMismatch.
double pairwise_distance(std::span<const double> a, std::span<const double> b);
double pairwise_distance(const Vector& a, const Vector& b);

/// Min-max normalisation; a constant input maps to all zeros. Throws EmptyEdgeSet.
std::vector<double> normalize_distances(std::span<const double> distances);

std::vector<double> kernel_weights(std::span<const double> normalized, double sigma);

AttentionReport attention(const KnowledgeGraph& g, const GatLayer& layer);

/// Refined features for every node. Isolated nodes pass through unchanged.
Matrix node_update(const KnowledgeGraph& g, const AttentionReport& report, const GatLayer& layer);

/// Refined frame-node rows (N x d) in t order. Throws EmptyGraph.
Matrix refine_frames(const KnowledgeGraph& g, const GatLayer& layer);

void validate(const GatLayer& layer, std::size_t dim);

/// Multi-head dot-product attention scores, the cost baseline.
struct MultiHeadBaseline {
  std::vector<Matrix> w_query;  // H matrices, each head_dim x D
  std::vector<Matrix> w_key;

  std::size_t num_heads() const { return w_query.size(); }
};

/// Returns H score matrices (N x N), entry (i, j) = q_i . k_j without scaling.
/// Throws ShapeMismatch.
std::vector<Matrix> multihead_baseline_attention(const Matrix& features, const MultiHeadBaseline& baseline);

}  // namespace tio
