#include <doctest.h>

#include "../oracles/oracles.hpp"
#include "../support/fixtures.hpp"
#include "tio/errors.hpp"
#include "tio/gat.hpp"
#include "tio/graph.hpp"

using namespace tio;

TEST_CASE("pairwise distance is the squared Euclidean norm") {
  Vector a(3), b(3);
  a << 1, 2, 3;
  b << 1, 0, -1;
  CHECK(pairwise_distance(a, b) == 20.0);
  CHECK(pairwise_distance(a, a) == 0.0);
  CHECK_THROWS_AS(pairwise_distance(a, Vector::Zero(2)), Error);
}

TEST_CASE("min-max normalisation") {
  const std::vector<double> d{4.0, 2.0, 6.0};
  const auto n = normalize_distances(d);
  CHECK(n == std::vector<double>{0.5, 0.0, 1.0});
  CHECK(normalize_distances(std::vector<double>{3.0, 3.0}) == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(normalize_distances(std::vector<double>{}), Error);
}

TEST_CASE("kernel weights") {
  const auto w = kernel_weights(std::vector<double>{0.0, 0.25, 1.0}, 0.25);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(w[2] == doctest::Approx(std::exp(-16.0)).epsilon(1e-15));
  CHECK_THROWS_AS(kernel_weights(std::vector<double>{0.0}, 0.0), Error);
}

TEST_CASE("attention matches the dense oracle on random graphs") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto b = fixtures::random_bundle(rng);
    const auto g = build_graph(b, 0);
    const auto dense = oracle::dense_graph(b, 0);
    REQUIRE(static_cast<std::size_t>(dense.x.rows()) == g.num_nodes());

    GatLayer layer;
    oracle::Mat projection;
    if (trial % 2 == 1) {
      std::normal_distribution<double> noise(0.0, 0.5);
      projection = oracle::Mat::Identity(dense.x.cols(), dense.x.cols());
      for (auto& x : projection.reshaped()) x += noise(rng);
      layer.projection = projection;
    }
    const auto report = attention(g, layer);
    const auto want = oracle::attention(dense, layer.sigma_kernel, layer.projection ? &projection : nullptr, true);
    for (std::size_t u = 0; u < g.num_nodes(); ++u) {
      double row = 0.0;
      for (const auto& e : report.per_node[u]) {
        CHECK(std::abs(e.alpha - want.alpha(u, e.neighbor)) < 1e-10);
        row += e.alpha;
      }
      std::size_t degree = 0;
      for (bool a : dense.adj[u]) degree += a;
      CHECK(report.per_node[u].size() == degree);
      if (degree > 0) CHECK(std::abs(row - 1.0) < 1e-9);
    }
    const Matrix updated = node_update(g, report, layer);
    CHECK((updated - want.updated).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("isolated frames pass through unchanged") {
  EmbeddingBundle b;
  b.dim = 2;
  b.class_names = {"a", "normal"};
  b.keywords.push_back({"k", "k", Vector::Zero(2), 0});
  Vector f1(2), f2(2), o(2);
  f1 << -1, 2;
  f2 << 3, -4;
  o << 0.5, 0.5;
  b.videos.push_back({"v", 0, {{1, f1, {{"p", {0, 0, 1, 1}, o}}}, {2, f2, {}}}});
  const auto g = build_graph(b, 0);
  const Matrix frames = refine_frames(g, GatLayer{});
  CHECK(frames.row(1).transpose() == f2);
  CHECK(frames.row(0).transpose() == o);
}

TEST_CASE("identity projection equals no projection") {
  const auto b = generate_synthetic_bundle(3, {});
  const auto g = build_graph(b, 2);
  GatLayer plain;
  GatLayer projected;
  projected.projection = Matrix::Identity(16, 16);
  const auto a = attention(g, plain);
  const auto c = attention(g, projected);
  CHECK(a.edge_distance == c.edge_distance);
  CHECK((refine_frames(g, plain) - refine_frames(g, projected)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("report exposes per-edge intermediates") {
  const auto b = generate_synthetic_bundle(8, {});
  const auto g = build_graph(b, 0);
  const auto r = attention(g, GatLayer{});
  REQUIRE(r.edge_distance.size() == g.edges.size());
  CHECK(r.edge_normalized[r.argmin_edge] == 0.0);
  CHECK(r.edge_normalized[r.argmax_edge] == 1.0);
  CHECK(r.alpha(0, g.edges[0].tail).has_value());
  CHECK_FALSE(r.alpha(0, 1).has_value());
}

TEST_CASE("multi-head baseline scores are query-key products") {
  Matrix x(3, 4);
  x << 1, 0, 2, 0, 0, 1, 0, 1, 1, 1, 1, 1;
  MultiHeadBaseline mh;
  mh.w_query = {Matrix::Identity(2, 4), Matrix::Ones(1, 4)};
  mh.w_key = {Matrix::Identity(2, 4), Matrix::Ones(1, 4)};
  const auto s = multihead_baseline_attention(x, mh);
  REQUIRE(s.size() == 2);
  CHECK(s[0](0, 2) == 1.0);
  CHECK(s[1](0, 2) == 12.0);
  mh.w_key[1] = Matrix::Ones(1, 3);
  CHECK_THROWS_AS(multihead_baseline_attention(x, mh), Error);
}
