// Cost models and timing for multi-head dot-product scoring versus
// distance-kernel scoring over all ordered pairs of n vectors in R^D.
//
// Counts are exact multiplies (additions are not counted):
//   multi-head: 2 H n D d   (query and key projections)
//             +   H n^2 d   (one d-dim dot product per ordered pair and head)
//   kernel:       n^2 D     (squared distance per ordered pair)
//             +   n^2       (one scalar multiply inside the kernel per pair)

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace tio {

struct CostModel {
  std::uint64_t n = 1;
  std::uint64_t input_dim = 1;  // D
  std::uint64_t heads = 1;      // H
  std::uint64_t head_dim = 1;   // d
};

std::uint64_t ops_multihead(const CostModel& m);
std::uint64_t ops_kernel(const CostModel& m);

/// Scores for every head and ordered pair, laid out [h][i][j].
/// `x` is n x D row-major; `w_query`/`w_key` are H x d x D row-major.
template <typename T>
std::vector<T> multihead_scores(std::span<const T> x, std::size_t n, std::size_t input_dim, std::span<const T> w_query,
                                std::span<const T> w_key, std::size_t heads, std::size_t head_dim) {
  std::vector<T> q(n * head_dim);
  std::vector<T> k(n * head_dim);
  std::vector<T> scores(heads * n * n);
  for (std::size_t h = 0; h < heads; ++h) {
    const T* wq = w_query.data() + h * head_dim * input_dim;
    const T* wk = w_key.data() + h * head_dim * input_dim;
    for (std::size_t i = 0; i < n; ++i) {
      const T* xi = x.data() + i * input_dim;
      for (std::size_t r = 0; r < head_dim; ++r) {
        T sq = T(0);
        T sk = T(0);
        for (std::size_t c = 0; c < input_dim; ++c) {
          sq = sq + wq[r * input_dim + c] * xi[c];
          sk = sk + wk[r * input_dim + c] * xi[c];
        }
        q[i * head_dim + r] = sq;
        k[i * head_dim + r] = sk;
      }
    }
    T* out = scores.data() + h * n * n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        T s = T(0);
        for (std::size_t r = 0; r < head_dim; ++r) s = s + q[i * head_dim + r] * k[j * head_dim + r];
        out[i * n + j] = s;
      }
    }
  }
  return scores;
}

/// exp(-gamma * ||x_i - x_j||^2) for every ordered pair, laid out [i][j].
template <typename T>
std::vector<T> kernel_scores(std::span<const T> x, std::size_t n, std::size_t input_dim, T gamma) {
  using std::exp;
  std::vector<T> scores(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* xi = x.data() + i * input_dim;
    for (std::size_t j = 0; j < n; ++j) {
      const T* xj = x.data() + j * input_dim;
      T dist = T(0);
      for (std::size_t c = 0; c < input_dim; ++c) {
        const T diff = xi[c] - xj[c];
        dist = dist + diff * diff;
      }
      scores[i * n + j] = exp(-(gamma * dist));
    }
  }
  return scores;
}

struct BenchConfig {
  std::uint64_t heads = 8;
  std::uint64_t input_dim = 1024;
  std::uint64_t head_dim = 64;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
  /// Rows with n above this are reported with op counts only (times are NaN).
  std::uint64_t max_timed_n = 1024;
};

struct BenchRow {
  std::uint64_t n = 0;
  std::uint64_t ops_multihead = 0;
  std::uint64_t ops_kernel = 0;
  double time_multihead = std::nan("");  // seconds, median of repeats
  double time_kernel = std::nan("");
  bool timed() const { return !std::isnan(time_multihead); }
};

struct BenchResult {
  std::vector<BenchRow> rows;
  /// First benchmarked n where sign(ops_multihead - ops_kernel) differs from
  /// the first row's sign.
  std::optional<std::uint64_t> crossover_n;
  /// Real root of 2HDd n + Hd n^2 = (D + 1) n^2, when one exists.
  std::optional<double> analytic_crossover;
};

/// Random inputs for a given (seed, n); identical across calls.
std::vector<double> bench_inputs(std::uint64_t seed, std::size_t count, std::uint64_t stream);

/// Throws InvalidArgument for non-ascending n values, zero sizes or repeats < 3.
BenchResult run_bench(std::span<const std::uint64_t> n_values, const BenchConfig& cfg);

void write_bench_csv(std::ostream& out, const BenchResult& result, const BenchConfig& cfg);
std::vector<BenchRow> read_bench_csv(std::istream& in);

}  // namespace tio
