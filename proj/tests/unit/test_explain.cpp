#include <doctest.h>

#include "tio/errors.hpp"
#include "tio/explain.hpp"

using namespace tio;

TEST_CASE("explanations carry the report's attention unchanged") {
  SyntheticSpec spec;
  spec.num_videos = 2;
  spec.frames_per_video = 4;
  spec.objects_per_frame = 3;
  spec.keywords_per_class = 2;
  const auto b = generate_synthetic_bundle(12, spec);
  const auto g = build_graph(b, 1);
  const auto report = attention(g, GatLayer{});

  const auto lines = explain_frame(b, g, report, 2, 100);
  CHECK(lines.size() == 3 * b.keywords.size());
  for (std::size_t i = 1; i < lines.size(); ++i) CHECK(lines[i - 1].alpha >= lines[i].alpha);
  for (const auto& l : lines) {
    CHECK(l.head == b.videos[1].id + "/frame_2");
    bool found = false;
    for (const auto& e : report.per_node[1]) found = found || (e.alpha == l.alpha && e.distance == l.distance);
    CHECK(found);
  }
  CHECK(explain_frame(b, g, report, 2, 4).size() == 4);
  CHECK_THROWS_AS(explain_frame(b, g, report, 0, 4), Error);
  CHECK_THROWS_AS(explain_frame(b, g, report, 5, 4), Error);

  const auto back = explanations_from_jsonl(explanations_to_jsonl(lines));
  REQUIRE(back.size() == lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    CHECK(back[i].alpha == lines[i].alpha);
    CHECK(back[i].bbox == lines[i].bbox);
    CHECK(back[i].tail == lines[i].tail);
  }
}

TEST_CASE("one keyword gives one line per object") {
  SyntheticSpec spec;
  spec.num_videos = 1;
  spec.frames_per_video = 2;
  spec.objects_per_frame = 3;
  const auto b = generate_synthetic_bundle(1, spec);
  const auto g = build_graph(b, 0, RelationPolicy::NearestKeyword);
  const auto lines = explain_frame(b, g, attention(g, GatLayer{}), 1, 5);
  CHECK(lines.size() == 3);
}

TEST_CASE("attention dump lists every frame-headed entry") {
  SyntheticSpec spec;
  spec.num_videos = 1;
  spec.frames_per_video = 3;
  spec.objects_per_frame = 2;
  const auto b = generate_synthetic_bundle(1, spec);
  const auto g = build_graph(b, 0);
  const std::string dump = attention_to_jsonl(b, g, attention(g, GatLayer{}));
  CHECK(std::count(dump.begin(), dump.end(), '\n') == 3 * 2 * 2);
}
