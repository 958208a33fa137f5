#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "tio/bundle.hpp"
#include "tio/types.hpp"

namespace tio {

enum class NodeKind { Frame, Object };

struct NodeId {
  NodeKind kind = NodeKind::Frame;
  std::size_t video_index = 0;
  std::size_t frame_index = 1;   // t, 1-based
  std::size_t object_index = 0;  // meaningful for Object nodes only

  static NodeId frame(std::size_t video, std::size_t t) { return {NodeKind::Frame, video, t, 0}; }
  static NodeId object(std::size_t video, std::size_t t, std::size_t i) { return {NodeKind::Object, video, t, i}; }

  auto operator<=>(const NodeId&) const = default;
};

/// (frame, keyword, object) with node indices into KnowledgeGraph::nodes.
struct Triple {
  std::size_t head = 0;
  std::size_t relation = 0;
  std::size_t tail = 0;
};

/// A distinct frame -> object link, with every relation that labels it.
struct Edge {
  std::size_t head = 0;
  std::size_t tail = 0;
  std::vector<std::size_t> relations;
};

struct NeighborEntry {
  std::size_t node = 0;
  std::size_t relation = 0;
};

/// Sparse boolean tensor over (head, tail, relation).
class AdjacencyTensor {
 public:
  AdjacencyTensor() = default;
  AdjacencyTensor(std::size_t num_nodes, std::size_t num_relations)
      : num_nodes_(num_nodes), num_relations_(num_relations) {}

  /// Returns false if the entry was already set.
  bool set(std::size_t head, std::size_t tail, std::size_t relation);
  bool contains(std::size_t head, std::size_t tail, std::size_t relation) const;
  std::size_t nnz() const { return entries_.size(); }
  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_relations() const { return num_relations_; }

 private:
  using Key = std::array<std::size_t, 3>;
  std::size_t num_nodes_ = 0;
  std::size_t num_relations_ = 0;
  std::vector<Key> entries_;  // kept sorted
};

enum class RelationPolicy {
  All,             // every frame/object pair linked under every keyword
  NearestKeyword,  // only the keyword nearest (Euclidean) to the object embedding
};

/// Directed multimodal graph for one video. Nodes are ordered frames first
/// (t = 1..T), then objects in (t, i) order, so rows [0, T) of `features` are
/// the frame nodes.
struct KnowledgeGraph {
  std::size_t video_index = 0;
  std::size_t num_frames = 0;
  std::size_t num_relations = 0;
  std::vector<NodeId> nodes;
  Matrix features;  // |V| x d, one row per node
  std::vector<Triple> triples;
  std::vector<Edge> edges;
  AdjacencyTensor adjacency;
  /// Both directions of every triple; lists are in triple order.
  std::vector<std::vector<NeighborEntry>> neighbor_index;
  /// Distinct edges incident to each node (either endpoint); attention
  /// neighbourhoods are read from here.
  std::vector<std::vector<std::size_t>> incident_edges;
  std::map<NodeId, std::size_t> lookup;

  std::size_t num_nodes() const { return nodes.size(); }
  /// Throws UnknownNode.
  std::size_t index_of(const NodeId& id) const;
};

KnowledgeGraph build_graph(const EmbeddingBundle& bundle, std::size_t video_index,
                           RelationPolicy policy = RelationPolicy::All);

bool adjacency_entry(const KnowledgeGraph& g, const NodeId& u, const NodeId& v, std::size_t relation);

struct ExplainedTriple {
  std::string frame_label;
  std::string keyword_text;
  std::string object_class;
  std::array<double, 4> bbox{};
};

std::vector<ExplainedTriple> export_triples(const KnowledgeGraph& g, const EmbeddingBundle& bundle);

/// One JSON object per line: {"head","relation","tail","bbox"}.
std::string triples_to_jsonl(const std::vector<ExplainedTriple>& triples);

std::string frame_label(const EmbeddingBundle& bundle, std::size_t video_index, std::size_t t);

}  // namespace tio
