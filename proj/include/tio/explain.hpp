#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "tio/bundle.hpp"
#include "tio/gat.hpp"
#include "tio/graph.hpp"

namespace tio {

/// One triple incident to a frame, annotated with the attention its object
/// received from that frame.
struct Explanation {
  std::string head;      // frame label
  std::string relation;  // keyword text
  std::string tail;      // object class
  double alpha = 0.0;
  double distance = 0.0;
  std::array<double, 4> bbox{};
};

/// Triples headed by frame t (1-based), sorted by alpha descending (ties keep
/// graph order), truncated to `topk`. Throws InvalidArgument for an unknown frame.
std::vector<Explanation> explain_frame(const EmbeddingBundle& bundle, const KnowledgeGraph& g,
                                       const AttentionReport& report, std::size_t t, std::size_t topk);

/// {"head","relation","tail","alpha","distance","bbox"} per line.
std::string explanations_to_jsonl(const std::vector<Explanation>& lines);
std::vector<Explanation> explanations_from_jsonl(const std::string& text);

/// Frame-headed attention entries as {"head","tail","relation","alpha","distance"}
/// lines, one per (edge, relation), in graph order.
std::string attention_to_jsonl(const EmbeddingBundle& bundle, const KnowledgeGraph& g, const AttentionReport& report);

}  // namespace tio
