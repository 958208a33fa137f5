#include "tio/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "tio/errors.hpp"

namespace tio {

std::uint64_t ops_multihead(const CostModel& m) {
  return 2 * m.heads * m.n * m.input_dim * m.head_dim + m.heads * m.n * m.n * m.head_dim;
}

std::uint64_t ops_kernel(const CostModel& m) { return m.n * m.n * m.input_dim + m.n * m.n; }

std::vector<double> bench_inputs(std::uint64_t seed, std::size_t count, std::uint64_t stream) {
  std::mt19937_64 rng(seed * 0x100000001b3ULL + stream);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> out(count);
  for (double& v : out) v = dist(rng);
  return out;
}

namespace {

template <typename F>
double median_seconds(std::size_t repeats, F&& run) {
  std::vector<double> times;
  times.reserve(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    run();
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

volatile double g_sink = 0.0;

int sign_of(const BenchRow& row) {
  if (row.ops_multihead > row.ops_kernel) return 1;
  if (row.ops_multihead < row.ops_kernel) return -1;
  return 0;
}

}  // namespace

BenchResult run_bench(std::span<const std::uint64_t> n_values, const BenchConfig& cfg) {
  if (n_values.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one n");
  if (cfg.repeats < 3) throw Error(ErrorCode::InvalidArgument, "repeats must be at least 3");
  if (cfg.heads == 0 || cfg.input_dim == 0 || cfg.head_dim == 0) {
    throw Error(ErrorCode::InvalidArgument, "heads and dimensions must be positive");
  }
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] == 0) throw Error(ErrorCode::InvalidArgument, "n must be positive");
    if (i > 0 && n_values[i] <= n_values[i - 1]) throw Error(ErrorCode::InvalidArgument, "n values must ascend");
  }

  BenchResult result;
  const std::size_t D = cfg.input_dim;
  const std::size_t H = cfg.heads;
  const std::size_t d = cfg.head_dim;
  // Projection weights are shared by every row so only x depends on n.
  std::vector<double> wq;
  std::vector<double> wk;

  for (const std::uint64_t n : n_values) {
    BenchRow row;
    row.n = n;
    const CostModel model{n, cfg.input_dim, cfg.heads, cfg.head_dim};
    row.ops_multihead = ops_multihead(model);
    row.ops_kernel = ops_kernel(model);

    if (n <= cfg.max_timed_n) {
      if (wq.empty()) {
        wq = bench_inputs(cfg.seed, H * d * D, 1);
        wk = bench_inputs(cfg.seed, H * d * D, 2);
      }
      const auto x = bench_inputs(cfg.seed, static_cast<std::size_t>(n) * D, 100 + n);
      const double gamma = 1.0 / static_cast<double>(D);
      row.time_multihead = median_seconds(cfg.repeats, [&] {
        const auto s = multihead_scores<double>(x, n, D, wq, wk, H, d);
        g_sink = g_sink + s.back();
      });
      row.time_kernel = median_seconds(cfg.repeats, [&] {
        const auto s = kernel_scores<double>(x, n, D, gamma);
        g_sink = g_sink + s.back();
      });
    }
    result.rows.push_back(row);
  }

  const int first_sign = sign_of(result.rows.front());
  for (const auto& row : result.rows) {
    if (sign_of(row) != first_sign) {
      result.crossover_n = row.n;
      break;
    }
  }
  // n (D + 1 - Hd) = 2HDd has a positive root only when D + 1 > Hd.
  const double hd = static_cast<double>(H * d);
  const double denom = static_cast<double>(D) + 1.0 - hd;
  if (denom > 0.0) result.analytic_crossover = 2.0 * hd * static_cast<double>(D) / denom;
  return result;
}

void write_bench_csv(std::ostream& out, const BenchResult& result, const BenchConfig& cfg) {
  out << "# H=" << cfg.heads << " D=" << cfg.input_dim << " d=" << cfg.head_dim << " repeats=" << cfg.repeats
      << " seed=" << cfg.seed << " max_timed_n=" << cfg.max_timed_n << '\n';
  out << "# ops are exact multiply counts (additions not counted); times are medians in seconds, nan = not timed\n";
  if (result.crossover_n) out << "# crossover_n=" << *result.crossover_n << '\n';
  if (result.analytic_crossover) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", *result.analytic_crossover);
    out << "# analytic_crossover=" << buf << '\n';
  }
  out << "n,ops_multihead,ops_kernel,time_multihead_s,time_kernel_s\n";
  for (const auto& row : result.rows) {
    char tm[64];
    char tk[64];
    std::snprintf(tm, sizeof(tm), "%.9g", row.time_multihead);
    std::snprintf(tk, sizeof(tk), "%.9g", row.time_kernel);
    out << row.n << ',' << row.ops_multihead << ',' << row.ops_kernel << ',' << tm << ',' << tk << '\n';
  }
}

std::vector<BenchRow> read_bench_csv(std::istream& in) {
  std::vector<BenchRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "n,ops_multihead,ops_kernel,time_multihead_s,time_kernel_s") {
        throw Error(ErrorCode::InvalidArgument, "unexpected bench CSV header: " + line);
      }
      header_seen = true;
      continue;
    }
    std::istringstream fields(line);
    std::string cell[5];
    for (auto& c : cell) {
      if (!std::getline(fields, c, ',')) throw Error(ErrorCode::InvalidArgument, "short bench row: " + line);
    }
    BenchRow row;
    row.n = std::stoull(cell[0]);
    row.ops_multihead = std::stoull(cell[1]);
    row.ops_kernel = std::stoull(cell[2]);
    row.time_multihead = std::stod(cell[3]);
    row.time_kernel = std::stod(cell[4]);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace tio
