#include "tio/explain.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tio/errors.hpp"

namespace tio {

using nlohmann::json;

namespace {

std::vector<Explanation> frame_lines(const EmbeddingBundle& bundle, const KnowledgeGraph& g,
                                     const AttentionReport& report, std::size_t u) {
  const VideoRecord& video = bundle.videos.at(g.video_index);
  std::vector<Explanation> out;
  for (const auto& entry : report.per_node.at(u)) {
    const NodeId& obj_id = g.nodes.at(entry.neighbor);
    const ObjectEntity& obj = video.frames.at(obj_id.frame_index - 1).objects.at(obj_id.object_index);
    for (std::size_t j : entry.relations) {
      out.push_back({frame_label(bundle, g.video_index, g.nodes[u].frame_index), bundle.keywords.at(j).text,
                     obj.class_name, entry.alpha, entry.distance, obj.bbox});
    }
  }
  return out;
}

}  // namespace

std::vector<Explanation> explain_frame(const EmbeddingBundle& bundle, const KnowledgeGraph& g,
                                       const AttentionReport& report, std::size_t t, std::size_t topk) {
  if (t == 0 || t > g.num_frames) {
    throw Error(ErrorCode::InvalidArgument, "frame " + std::to_string(t) + " is not in the video");
  }
  const std::size_t u = g.index_of(NodeId::frame(g.video_index, t));
  auto lines = frame_lines(bundle, g, report, u);
  std::stable_sort(lines.begin(), lines.end(), [](const Explanation& a, const Explanation& b) { return a.alpha > b.alpha; });
  if (lines.size() > topk) lines.resize(topk);
  return lines;
}

std::string explanations_to_jsonl(const std::vector<Explanation>& lines) {
  std::string out;
  for (const auto& l : lines) {
    json j{{"head", l.head},
           {"relation", l.relation},
           {"tail", l.tail},
           {"alpha", l.alpha},
           {"distance", l.distance},
           {"bbox", {l.bbox[0], l.bbox[1], l.bbox[2], l.bbox[3]}}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Explanation> explanations_from_jsonl(const std::string& text) {
  std::vector<Explanation> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    Explanation e;
    e.head = j.at("head").get<std::string>();
    e.relation = j.at("relation").get<std::string>();
    e.tail = j.at("tail").get<std::string>();
    e.alpha = j.at("alpha").get<double>();
    e.distance = j.at("distance").get<double>();
    const auto bbox = j.at("bbox").get<std::vector<double>>();
    if (bbox.size() != 4) throw Error(ErrorCode::InvalidArgument, "bbox needs 4 coordinates");
    std::copy(bbox.begin(), bbox.end(), e.bbox.begin());
    out.push_back(std::move(e));
  }
  return out;
}

std::string attention_to_jsonl(const EmbeddingBundle& bundle, const KnowledgeGraph& g, const AttentionReport& report) {
  std::string out;
  for (std::size_t u = 0; u < g.num_frames; ++u) {
    for (const auto& l : frame_lines(bundle, g, report, u)) {
      json j{{"head", l.head}, {"tail", l.tail}, {"relation", l.relation}, {"alpha", l.alpha}, {"distance", l.distance}};
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace tio
