#include "tio/graph.hpp"

#include <algorithm>
#include <limits>

#include <nlohmann/json.hpp>

#include "tio/errors.hpp"

namespace tio {

bool AdjacencyTensor::set(std::size_t head, std::size_t tail, std::size_t relation) {
  const Key key{head, tail, relation};
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key);
  if (it != entries_.end() && *it == key) return false;
  entries_.insert(it, key);
  return true;
}

bool AdjacencyTensor::contains(std::size_t head, std::size_t tail, std::size_t relation) const {
  return std::binary_search(entries_.begin(), entries_.end(), Key{head, tail, relation});
}

std::size_t KnowledgeGraph::index_of(const NodeId& id) const {
  auto it = lookup.find(id);
  if (it == lookup.end()) {
    throw Error(ErrorCode::UnknownNode, "node (video " + std::to_string(id.video_index) + ", t " +
                                            std::to_string(id.frame_index) + ") is not in the graph");
  }
  return it->second;
}

namespace {

std::size_t nearest_keyword(const EmbeddingBundle& bundle, const Vector& embedding) {
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < bundle.keywords.size(); ++j) {
    const double dist = (bundle.keywords[j].embedding - embedding).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = j;
    }
  }
  return best;
}

}  // namespace

KnowledgeGraph build_graph(const EmbeddingBundle& bundle, std::size_t video_index, RelationPolicy policy) {
  if (video_index >= bundle.videos.size()) {
    throw Error(ErrorCode::InvalidArgument, "video index " + std::to_string(video_index) + " out of range");
  }
  const VideoRecord& video = bundle.videos[video_index];
  if (video.frames.empty()) throw Error(ErrorCode::EmptyGraph, "video " + video.id + " has no frames");

  KnowledgeGraph g;
  g.video_index = video_index;
  g.num_frames = video.frames.size();
  g.num_relations = bundle.keywords.size();

  std::size_t num_objects = 0;
  for (const auto& frame : video.frames) num_objects += frame.objects.size();
  if (num_objects > 0 && bundle.keywords.empty()) {
    throw Error(ErrorCode::InvalidArgument, "triple construction needs at least one keyword");
  }

  const auto d = static_cast<Eigen::Index>(bundle.dim);
  g.features.resize(static_cast<Eigen::Index>(g.num_frames + num_objects), d);

  auto add_node = [&](const NodeId& id, const Vector& feature) {
    const std::size_t index = g.nodes.size();
    g.features.row(static_cast<Eigen::Index>(index)) = feature.transpose();
    g.nodes.push_back(id);
    g.lookup.emplace(id, index);
    return index;
  };

  for (const auto& frame : video.frames) add_node(NodeId::frame(video_index, frame.t), frame.embedding);
  for (const auto& frame : video.frames) {
    for (std::size_t i = 0; i < frame.objects.size(); ++i) {
      add_node(NodeId::object(video_index, frame.t, i), frame.objects[i].embedding);
    }
  }

  g.adjacency = AdjacencyTensor(g.nodes.size(), g.num_relations);
  g.neighbor_index.resize(g.nodes.size());
  g.incident_edges.resize(g.nodes.size());

  for (const auto& frame : video.frames) {
    const std::size_t head = g.lookup.at(NodeId::frame(video_index, frame.t));
    for (std::size_t i = 0; i < frame.objects.size(); ++i) {
      const std::size_t tail = g.lookup.at(NodeId::object(video_index, frame.t, i));
      std::vector<std::size_t> relations;
      if (policy == RelationPolicy::All) {
        for (std::size_t j = 0; j < g.num_relations; ++j) relations.push_back(j);
      } else {
        relations.push_back(nearest_keyword(bundle, frame.objects[i].embedding));
      }

      Edge edge{head, tail, {}};
      for (std::size_t j : relations) {
        if (!g.adjacency.set(head, tail, j)) continue;
        g.triples.push_back({head, j, tail});
        edge.relations.push_back(j);
        g.neighbor_index[head].push_back({tail, j});
        g.neighbor_index[tail].push_back({head, j});
      }
      if (!edge.relations.empty()) {
        const std::size_t e = g.edges.size();
        g.edges.push_back(std::move(edge));
        g.incident_edges[head].push_back(e);
        g.incident_edges[tail].push_back(e);
      }
    }
  }
  return g;
}

bool adjacency_entry(const KnowledgeGraph& g, const NodeId& u, const NodeId& v, std::size_t relation) {
  const std::size_t head = g.index_of(u);
  const std::size_t tail = g.index_of(v);
  if (relation >= g.num_relations) {
    throw Error(ErrorCode::InvalidArgument, "relation index " + std::to_string(relation) + " out of range");
  }
  return g.adjacency.contains(head, tail, relation);
}

std::string frame_label(const EmbeddingBundle& bundle, std::size_t video_index, std::size_t t) {
  return bundle.videos.at(video_index).id + "/frame_" + std::to_string(t);
}

std::vector<ExplainedTriple> export_triples(const KnowledgeGraph& g, const EmbeddingBundle& bundle) {
  std::vector<ExplainedTriple> out;
  out.reserve(g.triples.size());
  const VideoRecord& video = bundle.videos.at(g.video_index);
  for (const auto& triple : g.triples) {
    const NodeId& head = g.nodes[triple.head];
    const NodeId& tail = g.nodes[triple.tail];
    const ObjectEntity& obj = video.frames.at(tail.frame_index - 1).objects.at(tail.object_index);
    out.push_back({frame_label(bundle, g.video_index, head.frame_index), bundle.keywords.at(triple.relation).text,
                   obj.class_name, obj.bbox});
  }
  return out;
}

std::string triples_to_jsonl(const std::vector<ExplainedTriple>& triples) {
  std::string out;
  for (const auto& t : triples) {
    nlohmann::json line{{"head", t.frame_label},
                        {"relation", t.keyword_text},
                        {"tail", t.object_class},
                        {"bbox", {t.bbox[0], t.bbox[1], t.bbox[2], t.bbox[3]}}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace tio
