#include <doctest.h>

#include <random>
#include <sstream>

#include "../oracles/oracles.hpp"
#include "tio/errors.hpp"
#include "tio/metrics.hpp"

using namespace tio;

TEST_CASE("confusion counts and their ratios") {
  const DetectionOutcome o{{0.9, 0.2, 0.6, 0.4}, {1, 1, 0, 0}};
  const auto c = confusion_counts(o, 0.5);
  CHECK(c == ConfusionCounts{1, 1, 1, 1});
  CHECK(precision(c) == 0.5);
  CHECK(recall(c) == 0.5);
  CHECK(precision(confusion_counts(o, 1.0)) == 1.0);
  CHECK(recall(confusion_counts(DetectionOutcome{{0.3}, {0}}, 0.0)) == 0.0);
}

TEST_CASE("average precision on a fixed ranking") {
  const DetectionOutcome o{{0.9, 0.8, 0.7, 0.6, 0.5, 0.4}, {1, 0, 1, 1, 0, 0}};
  CHECK(average_precision(o) == doctest::Approx(29.0 / 36.0).epsilon(1e-15));
  CHECK(average_precision(o) == doctest::Approx(oracle::average_precision(o.scores, o.truths)).epsilon(1e-15));
}

TEST_CASE("average precision edge cases") {
  CHECK(average_precision(DetectionOutcome{{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}}) == 1.0);
  CHECK(average_precision(DetectionOutcome{{0.3, 0.6, 0.1}, {1, 1, 1}}) == 1.0);
  CHECK(average_precision(DetectionOutcome{{1.0, 1.0}, {1, 0}}) == 0.5);
  CHECK(average_precision(DetectionOutcome{{0.3, 0.6}, {0, 0}}) == 0.0);
  const DetectionOutcome o{{0.5}, {1}};
  CHECK_THROWS_AS(average_precision(o, std::vector<double>{}), Error);
  CHECK_THROWS_AS(average_precision(DetectionOutcome{{0.5, 0.2}, {1}}), Error);
  CHECK_THROWS_AS(average_precision(DetectionOutcome{{1.5}, {1}}), Error);
}

TEST_CASE("AUC edge cases") {
  CHECK(auc(DetectionOutcome{{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}}) == 1.0);
  CHECK(auc(DetectionOutcome{{0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}}) == 0.0);
  CHECK(auc(DetectionOutcome{{0.4, 0.4, 0.4, 0.4, 0.4}, {1, 0, 0, 1, 0}}) == 0.5);
  CHECK_THROWS_AS(auc(DetectionOutcome{{0.4, 0.5}, {1, 1}}), Error);
}

TEST_CASE("AP and AUC agree with their oracles on random instances") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(1, 12);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> level(0, 5);
  for (int trial = 0; trial < 300; ++trial) {
    DetectionOutcome o;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      o.scores.push_back(level(rng) / 5.0);  // coarse levels force ties and endpoint scores
      o.truths.push_back(coin(rng));
    }
    CHECK(std::abs(average_precision(o) - oracle::average_precision(o.scores, o.truths)) < 1e-9);
    const auto pos = std::count(o.truths.begin(), o.truths.end(), 1);
    if (pos > 0 && pos < n) CHECK(std::abs(auc(o) - oracle::pairwise_auc(o.scores, o.truths)) < 1e-9);
  }
}

TEST_CASE("retrieval ranking and recall@k") {
  Vector q = Vector::Zero(2);
  std::vector<Vector> gallery(4, Vector::Zero(2));
  gallery[0] << 3, 0;
  gallery[1] << 1, 0;
  gallery[2] << 0, 1;
  gallery[3] << 2, 0;
  auto r = rank_gallery(q, gallery);
  CHECK(r.order == std::vector<std::size_t>{1, 2, 3, 0});
  CHECK(r.similarities[0] == -3.0);
  r.relevance = {1, 0, 1, 0};
  CHECK(recall_at_k(r, 1) == 0.0);
  CHECK(recall_at_k(r, 2) == 0.5);
  CHECK(recall_at_k(r, 4) == 1.0);
  CHECK_THROWS_AS(recall_at_k(r, 0), Error);
  CHECK_THROWS_AS(recall_at_k(r, 5), Error);
  r.relevance = {0, 0, 0, 0};
  CHECK_THROWS_AS(recall_at_k(r, 1), Error);
  CHECK_THROWS_AS(rank_gallery(q, std::vector<Vector>{}), Error);
}

TEST_CASE("recall@k matches direct enumeration") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> size(1, 12);
  std::uniform_int_distribution<int> coord(-2, 2);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(rng);
    Vector q(2);
    q << coord(rng), coord(rng);
    std::vector<Vector> gallery;
    for (int i = 0; i < n; ++i) {
      Vector g(2);
      g << coord(rng), coord(rng);
      gallery.push_back(g);
    }
    auto r = rank_gallery(q, gallery);
    r.relevance.clear();
    for (int i = 0; i < n; ++i) r.relevance.push_back(coin(rng));
    if (std::count(r.relevance.begin(), r.relevance.end(), 1) == 0) r.relevance[0] = 1;
    for (int k = 1; k <= n; ++k) {
      CHECK(recall_at_k(r, std::size_t(k)) == oracle::recall_at_k(r.similarities, r.relevance, std::size_t(k)));
    }
  }
}

TEST_CASE("metrics CSV round-trip") {
  const std::vector<MetricRow> rows{{"detection", "AP", 29.0 / 36.0}, {"retrieval", "R@5", 1.0}};
  std::stringstream s;
  write_metrics_csv(s, rows);
  CHECK(s.str() == "metric,name,value\ndetection,AP,0.805555555556\nretrieval,R@5,1\n");
  const auto back = read_metrics_csv(s);
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "AP");
  CHECK(back[0].value == doctest::Approx(29.0 / 36.0).epsilon(1e-11));
  std::stringstream bad("x,y\n");
  CHECK_THROWS_AS(read_metrics_csv(bad), Error);
}
