#include <doctest.h>

#include "tio/errors.hpp"
#include "tio/graph.hpp"
#include "tio/losses.hpp"

using namespace tio;

TEST_CASE("classification loss is the mean negative log-likelihood") {
  Vector p1(2), p2(2);
  p1 << 0.25, 0.75;
  p2 << 1.0, 0.0;
  const std::vector<LabelledPrediction> batch{{p1, 1}, {p2, 1}};
  CHECK(cls_loss(batch) == doctest::Approx((-std::log(0.75) - std::log(1e-12)) / 2.0));
  CHECK_THROWS_AS(cls_loss(std::vector<LabelledPrediction>{}), Error);
  CHECK_THROWS_AS(cls_loss(std::vector<LabelledPrediction>{{p1, 2}}), Error);
}

TEST_CASE("retrieval hinge") {
  Vector q = Vector::Zero(2), near(2), far(2);
  near << 1, 0;
  far << 0, 3;
  CHECK(ret_loss(std::vector<RetrievalTriplet>{{q, near, far}}, 0.9) == 0.0);
  CHECK(ret_loss(std::vector<RetrievalTriplet>{{q, far, near}}, 0.9) == doctest::Approx(2.9));
  CHECK(ret_loss(std::vector<RetrievalTriplet>{{q, far, near}, {q, far, near}}, 0.9) == doctest::Approx(5.8));
  CHECK(ret_loss(std::vector<RetrievalTriplet>{}, 0.9) == 0.0);
  CHECK_THROWS_AS(ret_loss(std::vector<RetrievalTriplet>{{q, Vector::Zero(3), far}}, 0.9), Error);
}

TEST_CASE("attention supervision loss") {
  SyntheticSpec spec;
  spec.num_videos = 1;
  spec.frames_per_video = 3;
  spec.objects_per_frame = 2;
  const auto b = generate_synthetic_bundle(0, spec);
  const auto g = build_graph(b, 0);
  const auto r = attention(g, GatLayer{});

  EdgeSupervision sup;
  const auto& e0 = g.edges[0];
  const auto& e1 = g.edges[1];
  sup.positives.emplace_back(e0.head, e0.tail);
  sup.negatives.emplace_back(e1.head, e1.tail);
  sup.negatives.emplace_back(e0.head, g.edges[5].tail);  // other frame's object
  const auto res = gat_reg_loss(r, sup, 2.0);
  const double want = 2.0 * (-std::log(*r.alpha(e0.head, e0.tail)) - std::log(1.0 - *r.alpha(e1.head, e1.tail)));
  CHECK(res.loss == doctest::Approx(want).epsilon(1e-14));
  CHECK(res.skipped_negatives == 1);

  EdgeSupervision lonely;
  lonely.positives.emplace_back(g.edges[2].tail, g.edges[2].head);  // object's only neighbour: alpha = 1
  CHECK(gat_reg_loss(r, lonely, 1.0).loss <= 1.2e-11);

  EdgeSupervision bad;
  bad.positives.emplace_back(0, 1);
  CHECK_THROWS_AS(gat_reg_loss(r, bad, 1.0), Error);
}

TEST_CASE("total loss uses the configured weights") {
  TrainConfig cfg;
  CHECK(total_loss(1.0, 1.0, 1.0, cfg) == doctest::Approx(3.7));
  CHECK(total_loss(2.0, 0.0, 0.5, cfg) == doctest::Approx(3.3));
}

TEST_CASE("anomaly score is one minus the non-violence probability") {
  Vector p(3);
  p << 0.2, 0.5, 0.3;
  CHECK(anomaly_score(p) == doctest::Approx(0.7));
  Classifier clf = Classifier::zeros(3, 4);
  const Vector probs = classify(Vector::Ones(4), clf);
  CHECK(probs.sum() == doctest::Approx(1.0));
  CHECK(probs[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("training config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.lr0 = 0.0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = {};
  cfg.decay_per_epoch = 1.5;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = {};
  cfg.sigma_time = -1.0;
  CHECK_THROWS_AS(validate(cfg), Error);
}
