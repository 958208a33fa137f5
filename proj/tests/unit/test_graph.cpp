#include <doctest.h>

#include <nlohmann/json.hpp>

#include "../support/fixtures.hpp"
#include "tio/errors.hpp"
#include "tio/graph.hpp"

using namespace tio;

TEST_CASE("nodes are frames first, then objects in frame order") {
  SyntheticSpec spec;
  spec.num_videos = 2;
  spec.frames_per_video = 3;
  spec.objects_per_frame = 2;
  const auto b = generate_synthetic_bundle(4, spec);
  const auto g = build_graph(b, 1);
  REQUIRE(g.num_nodes() == 3 + 6);
  CHECK(g.num_frames == 3);
  for (std::size_t t = 1; t <= 3; ++t) {
    CHECK(g.nodes[t - 1] == NodeId::frame(1, t));
    CHECK(g.features.row(static_cast<Eigen::Index>(t - 1)).transpose() == b.videos[1].frames[t - 1].embedding);
  }
  CHECK(g.nodes[3] == NodeId::object(1, 1, 0));
  CHECK(g.nodes[8] == NodeId::object(1, 3, 1));
  CHECK(g.index_of(NodeId::object(1, 2, 1)) == 6);
  CHECK_THROWS_AS(g.index_of(NodeId::object(0, 1, 0)), Error);
}

TEST_CASE("relation policies decide how many triples each edge carries") {
  SyntheticSpec spec;
  spec.num_videos = 1;
  spec.frames_per_video = 4;
  spec.objects_per_frame = 3;
  spec.num_classes = 3;
  spec.keywords_per_class = 2;
  const auto b = generate_synthetic_bundle(9, spec);
  const auto all = build_graph(b, 0, RelationPolicy::All);
  const auto nearest = build_graph(b, 0, RelationPolicy::NearestKeyword);

  CHECK(all.edges.size() == 12);
  CHECK(nearest.edges.size() == 12);
  CHECK(all.triples.size() == 12 * b.keywords.size());
  CHECK(nearest.triples.size() == 12);
  CHECK(all.adjacency.nnz() == all.triples.size());

  for (const auto& tr : nearest.triples) {
    const Vector obj = nearest.features.row(static_cast<Eigen::Index>(tr.tail)).transpose();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < b.keywords.size(); ++j) {
      const double d = (obj - b.keywords[j].embedding).norm();
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    CHECK(tr.relation == best_j);
  }
}

TEST_CASE("adjacency entries follow the triples") {
  SyntheticSpec spec;
  spec.num_videos = 1;
  spec.frames_per_video = 2;
  spec.objects_per_frame = 1;
  const auto b = generate_synthetic_bundle(1, spec);
  const auto g = build_graph(b, 0);
  CHECK(adjacency_entry(g, NodeId::frame(0, 1), NodeId::object(0, 1, 0), 0));
  CHECK(adjacency_entry(g, NodeId::frame(0, 1), NodeId::object(0, 1, 0), 1));
  CHECK_FALSE(adjacency_entry(g, NodeId::frame(0, 1), NodeId::object(0, 2, 0), 0));
  CHECK_FALSE(adjacency_entry(g, NodeId::object(0, 1, 0), NodeId::frame(0, 1), 0));
  CHECK_THROWS_AS(adjacency_entry(g, NodeId::frame(0, 9), NodeId::object(0, 1, 0), 0), Error);
  CHECK_THROWS_AS(adjacency_entry(g, NodeId::frame(0, 1), NodeId::object(0, 1, 0), 5), Error);
}

TEST_CASE("neighbourhoods are symmetric and distinct") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = fixtures::random_bundle(rng);
    const auto g = build_graph(b, 0);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      const auto& edge = g.edges[e];
      CHECK(g.nodes[edge.head].kind == NodeKind::Frame);
      CHECK(g.nodes[edge.tail].kind == NodeKind::Object);
      CHECK(edge.relations.size() == b.keywords.size());
      const auto& hi = g.incident_edges[edge.head];
      const auto& ti = g.incident_edges[edge.tail];
      CHECK(std::count(hi.begin(), hi.end(), e) == 1);
      CHECK(std::count(ti.begin(), ti.end(), e) == 1);
    }
    for (std::size_t u = g.num_frames; u < g.num_nodes(); ++u) CHECK(g.incident_edges[u].size() == 1);
  }
}

TEST_CASE("graph construction errors") {
  EmbeddingBundle b;
  b.dim = 2;
  b.class_names = {"a", "normal"};
  b.videos.push_back({"empty", 0, {}});
  CHECK_THROWS_AS(build_graph(b, 0), Error);
  CHECK_THROWS_AS(build_graph(b, 3), Error);

  b.videos[0].frames.push_back({1, Vector::Zero(2), {{"person", {0, 0, 1, 1}, Vector::Ones(2)}}});
  try {
    build_graph(b, 0);
    FAIL("objects without keywords should be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("exported triples name frames, keywords and objects") {
  SyntheticSpec spec;
  spec.num_videos = 1;
  spec.frames_per_video = 2;
  spec.objects_per_frame = 1;
  const auto b = generate_synthetic_bundle(2, spec);
  const auto g = build_graph(b, 0, RelationPolicy::NearestKeyword);
  const auto triples = export_triples(g, b);
  REQUIRE(triples.size() == 2);
  CHECK(triples[1].frame_label == b.videos[0].id + "/frame_2");
  CHECK(triples[1].object_class == b.videos[0].frames[1].objects[0].class_name);
  CHECK(triples[1].bbox == b.videos[0].frames[1].objects[0].bbox);
  const std::string jsonl = triples_to_jsonl(triples);
  std::istringstream in(jsonl);
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("head").get<std::string>() == triples[count].frame_label);
    CHECK(j.at("relation").get<std::string>() == triples[count].keyword_text);
    ++count;
  }
  CHECK(count == 2);
}
