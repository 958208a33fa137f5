#include <doctest.h>

#include <sstream>

#include "../oracles/oracles.hpp"
#include "tio/bench.hpp"
#include "tio/errors.hpp"

using namespace tio;
using oracle::Counted;

namespace {

std::vector<Counted> counted(const std::vector<double>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("op formulas match instrumented multiply counts") {
  for (std::uint64_t n : {1u, 2u, 7u, 16u}) {
    for (CostModel m : {CostModel{n, 5, 2, 3}, CostModel{n, 8, 1, 4}}) {
      const auto x = counted(bench_inputs(1, n * m.input_dim, 0));
      const auto wq = counted(bench_inputs(1, m.heads * m.head_dim * m.input_dim, 1));
      const auto wk = counted(bench_inputs(1, m.heads * m.head_dim * m.input_dim, 2));
      Counted::multiplies = 0;
      multihead_scores<Counted>(x, n, m.input_dim, wq, wk, m.heads, m.head_dim);
      CHECK(Counted::multiplies == ops_multihead(m));
      Counted::multiplies = 0;
      kernel_scores<Counted>(x, n, m.input_dim, Counted(0.5));
      CHECK(Counted::multiplies == ops_kernel(m));
    }
  }
}

TEST_CASE("closed-form op counts") {
  const CostModel m{2044, 1024, 8, 64};
  CHECK(ops_multihead(m) == 2ull * 8 * 2044 * 1024 * 64 + 8ull * 2044 * 2044 * 64);
  CHECK(ops_kernel(m) == 2044ull * 2044 * 1024 + 2044ull * 2044);
  CHECK(ops_kernel(m) <= ops_multihead(m));
  CHECK(ops_kernel({2045, 1024, 8, 64}) > ops_multihead({2045, 1024, 8, 64}));
}

TEST_CASE("scorers compute what they claim") {
  const std::vector<double> x{0, 0, 1, 1};
  const auto k = kernel_scores<double>(x, 2, 2, 0.5);
  CHECK(k[0] == 1.0);
  CHECK(k[1] == doctest::Approx(std::exp(-1.0)));
  const std::vector<double> w{1, 0};
  const auto s = multihead_scores<double>(x, 2, 2, w, w, 1, 1);
  CHECK(s == std::vector<double>{0, 0, 0, 1});
}

TEST_CASE("bench reports the crossover and skips timing for large n") {
  BenchConfig cfg;
  cfg.max_timed_n = 8;
  const std::vector<std::uint64_t> ns{4, 8, 2044, 2045, 100000};
  const auto r = run_bench(ns, cfg);
  REQUIRE(r.rows.size() == 5);
  CHECK(r.rows[0].timed());
  CHECK(r.rows[1].timed());
  CHECK_FALSE(r.rows[2].timed());
  REQUIRE(r.crossover_n);
  CHECK(*r.crossover_n == 2045);
  REQUIRE(r.analytic_crossover);
  CHECK(*r.analytic_crossover == doctest::Approx(1048576.0 / 513.0));

  std::stringstream s;
  write_bench_csv(s, r, cfg);
  const auto rows = read_bench_csv(s);
  REQUIRE(rows.size() == 5);
  CHECK(rows[4].ops_kernel == r.rows[4].ops_kernel);
  CHECK(std::isnan(rows[4].time_kernel));
  CHECK(rows[0].time_kernel == r.rows[0].time_kernel);
}

TEST_CASE("bench argument checks") {
  BenchConfig cfg;
  CHECK_THROWS_AS(run_bench(std::vector<std::uint64_t>{8, 4}, cfg), Error);
  CHECK_THROWS_AS(run_bench(std::vector<std::uint64_t>{0}, cfg), Error);
  cfg.repeats = 2;
  CHECK_THROWS_AS(run_bench(std::vector<std::uint64_t>{4}, cfg), Error);
}
