#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tio/bench.hpp"
#include "tio/bundle.hpp"
#include "tio/checkpoint.hpp"
#include "tio/errors.hpp"
#include "tio/explain.hpp"
#include "tio/graph.hpp"
#include "tio/metrics.hpp"
#include "tio/model.hpp"

namespace tio::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("TIO_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, std::string("TIO_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

const std::map<std::string, RelationPolicy> kPolicies{{"all", RelationPolicy::All},
                                                      {"nearest", RelationPolicy::NearestKeyword}};

// Writes to a file when a path is given, otherwise to the fallback stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
    if (!*file_) throw Error(ErrorCode::IoFailure, "cannot write " + path);
    stream_ = file_.get();
  }
  std::ostream& get() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw Error(ErrorCode::IoFailure, "write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

struct ModelInputs {
  EmbeddingBundle bundle;
  Model model;
};

ModelInputs load_inputs(const std::string& data, const std::string& checkpoint) {
  ModelInputs in{load_bundle(data), load_checkpoint(checkpoint)};
  if (in.model.dim() != in.bundle.dim) {
    throw Error(ErrorCode::DimensionMismatch, "checkpoint has d=" + std::to_string(in.model.dim()) + ", bundle has d=" +
                                                  std::to_string(in.bundle.dim));
  }
  if (in.model.num_classes() != in.bundle.num_classes()) {
    throw Error(ErrorCode::DimensionMismatch, "checkpoint has " + std::to_string(in.model.num_classes()) +
                                                  " classes, bundle has " + std::to_string(in.bundle.num_classes()));
  }
  return in;
}

std::size_t require_video(const EmbeddingBundle& bundle, const std::string& id) {
  const auto index = bundle.find_video(id);
  if (!index) throw Error(ErrorCode::InvalidArgument, "unknown video id '" + id + "'");
  return *index;
}

struct GenerateOptions {
  std::string out;
  std::optional<std::uint64_t> seed;
  SyntheticSpec spec;
};

struct TrainOptions {
  std::string data;
  std::string out;
  std::string history;
  std::optional<std::uint64_t> seed;
  std::string policy = "all";
  TrainConfig cfg;
};

struct DetectOptions {
  std::string data;
  std::string checkpoint;
  std::string video;
  std::string out;
  std::string metrics;
  std::optional<double> theta;
};

struct RetrieveOptions {
  std::string data;
  std::string checkpoint;
  std::string video;
  std::string out;
  std::string metrics;
};

struct ExplainOptions {
  std::string data;
  std::string checkpoint;
  std::string video;
  std::size_t frame = 1;
  std::size_t topk = 5;
  std::string policy = "all";
  std::string out;
};

struct BenchOptions {
  std::vector<std::uint64_t> n_list{16, 64, 256, 1024, 2044, 2045, 4096, 65536};
  std::optional<std::uint64_t> seed;
  BenchConfig cfg;
  std::string out;
};

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
  const auto bundle = generate_synthetic_bundle(resolve_seed(o.seed), o.spec);
  write_bundle(bundle, o.out);
  out << "wrote " << bundle.videos.size() << " videos to " << o.out << '\n';
  return kExitOk;
}

int cmd_train(TrainOptions o, std::ostream& out) {
  const auto bundle = load_bundle(o.data);
  o.cfg.seed = resolve_seed(o.seed);
  o.cfg.relation_policy = kPolicies.at(o.policy);
  const TrainResult result = train(bundle, o.cfg);

  save_checkpoint(result.model, o.out);
  const std::string history = o.history.empty() ? o.out + ".history.csv" : o.history;
  Sink sink(history, out);
  auto& h = sink.get();
  h << "epoch,lr,l_cls,l_ret,l_gat,l_total,skipped_negatives\n";
  for (const auto& rec : result.history) {
    h << rec.epoch << ',' << fmt17(rec.lr) << ',' << fmt17(rec.loss.l_cls) << ',' << fmt17(rec.loss.l_ret) << ','
      << fmt17(rec.loss.l_gat) << ',' << fmt17(rec.loss.l_total) << ',' << rec.loss.skipped_negatives << '\n';
  }
  sink.finish();
  out << "trained " << result.history.size() << " epochs; checkpoint " << o.out << ", history " << history << '\n';
  return kExitOk;
}

int cmd_detect(const DetectOptions& o, std::ostream& out) {
  const auto in = load_inputs(o.data, o.checkpoint);
  std::vector<std::size_t> videos;
  if (!o.video.empty()) {
    videos.push_back(require_video(in.bundle, o.video));
  } else {
    for (std::size_t v = 0; v < in.bundle.videos.size(); ++v) videos.push_back(v);
  }

  Sink sink(o.out, out);
  auto& csv = sink.get();
  csv << "video_id,level,frame,score" << (o.theta ? ",decision" : "") << '\n';
  DetectionOutcome outcome;
  for (std::size_t v : videos) {
    const auto& video = in.bundle.videos[v];
    const auto result = infer_video(in.model, build_graph(in.bundle, v));
    auto emit = [&](const std::string& level, const std::string& frame, double score) {
      csv << video.id << ',' << level << ',' << frame << ',' << fmt17(score);
      if (o.theta) csv << ',' << (score >= *o.theta ? 1 : 0);
      csv << '\n';
    };
    for (Eigen::Index t = 0; t < result.frame_scores.size(); ++t) emit("frame", std::to_string(t + 1), result.frame_scores[t]);
    emit("video", "", result.video_score);
    outcome.scores.push_back(result.video_score);
    outcome.truths.push_back(video.label_index == in.bundle.non_violence_index() ? 0 : 1);
  }
  sink.finish();

  if (!o.metrics.empty()) {
    std::vector<MetricRow> rows{{"detection", "AP", average_precision(outcome)}};
    const auto positives = std::count(outcome.truths.begin(), outcome.truths.end(), 1);
    if (positives > 0 && positives < static_cast<long>(outcome.truths.size())) {
      rows.push_back({"detection", "AUC", auc(outcome)});
    }
    Sink msink(o.metrics, out);
    write_metrics_csv(msink.get(), rows);
    msink.finish();
  }
  return kExitOk;
}

int cmd_retrieve(const RetrieveOptions& o, std::ostream& out) {
  const auto in = load_inputs(o.data, o.checkpoint);
  const std::size_t v = require_video(in.bundle, o.video);
  if (in.bundle.keywords.empty()) throw Error(ErrorCode::InvalidArgument, "bundle has no keywords to retrieve");
  const auto& video = in.bundle.videos[v];
  const auto result = infer_video(in.model, build_graph(in.bundle, v));

  std::vector<Vector> gallery;
  for (const auto& kw : in.bundle.keywords) gallery.push_back(kw.embedding);
  RetrievalRanking ranking = rank_gallery(result.video_embedding, gallery);
  for (std::size_t j = 0; j < gallery.size(); ++j) {
    ranking.relevance[j] = in.bundle.keywords[j].source_label_index == video.label_index ? 1 : 0;
  }

  {
    Sink sink(o.out, out);
    auto& csv = sink.get();
    csv << "rank,keyword_id,source_label_index,similarity,relevant\n";
    for (std::size_t r = 0; r < ranking.order.size(); ++r) {
      const std::size_t j = ranking.order[r];
      csv << r + 1 << ',' << in.bundle.keywords[j].id << ',' << in.bundle.keywords[j].source_label_index << ','
          << fmt17(ranking.similarities[j]) << ',' << ranking.relevance[j] << '\n';
    }
    sink.finish();
  }

  const bool has_relevant = std::count(ranking.relevance.begin(), ranking.relevance.end(), 1) > 0;
  if (has_relevant) {
    std::vector<MetricRow> rows;
    for (std::size_t k : {1u, 5u, 10u}) {
      // Galleries smaller than k report R@N.
      rows.push_back({"retrieval", "R@" + std::to_string(k), recall_at_k(ranking, std::min(k, ranking.order.size()))});
    }
    if (o.out.empty() && o.metrics.empty()) out << '\n';
    Sink msink(o.metrics, out);
    write_metrics_csv(msink.get(), rows);
    msink.finish();
  }
  return kExitOk;
}

int cmd_explain(const ExplainOptions& o, std::ostream& out) {
  const auto in = load_inputs(o.data, o.checkpoint);
  const std::size_t v = require_video(in.bundle, o.video);
  const KnowledgeGraph g = build_graph(in.bundle, v, kPolicies.at(o.policy));
  if (o.frame == 0 || o.frame > g.num_frames) {
    throw Error(ErrorCode::InvalidArgument, "video '" + o.video + "' has no frame " + std::to_string(o.frame));
  }
  const AttentionReport report = attention(g, in.model.gat);
  Sink sink(o.out, out);
  sink.get() << explanations_to_jsonl(explain_frame(in.bundle, g, report, o.frame, o.topk));
  sink.finish();
  return kExitOk;
}

int cmd_bench(BenchOptions o, std::ostream& out) {
  o.cfg.seed = resolve_seed(o.seed);
  const BenchResult result = run_bench(o.n_list, o.cfg);
  Sink sink(o.out, out);
  write_bench_csv(sink.get(), result, o.cfg);
  sink.finish();
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::IoFailure:
      return kExitRuntime;
    default:
      return kExitUsage;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-graph violence detection, retrieval and explanation over embedding bundles", "tio"};
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "write a synthetic embedding bundle");
  generate->add_option("--out", gen.out, "output bundle directory")->required();
  generate->add_option("--seed", gen.seed, "RNG seed (falls back to TIO_SEED)");
  generate->add_option("--videos", gen.spec.num_videos)->check(CLI::PositiveNumber);
  generate->add_option("--frames", gen.spec.frames_per_video)->check(CLI::PositiveNumber);
  generate->add_option("--dim", gen.spec.dim)->check(CLI::PositiveNumber);
  generate->add_option("--classes", gen.spec.num_classes)->check(CLI::Range(2, 1 << 20));
  generate->add_option("--separation", gen.spec.class_separation)->check(CLI::NonNegativeNumber);
  generate->add_option("--objects", gen.spec.objects_per_frame)->check(CLI::PositiveNumber);
  generate->add_option("--noise", gen.spec.noise_std)->check(CLI::NonNegativeNumber);
  generate->add_option("--keywords-per-class", gen.spec.keywords_per_class)->check(CLI::PositiveNumber);

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "train a model on a bundle and write a checkpoint");
  train_cmd->add_option("--data", tr.data, "bundle directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", tr.out, "checkpoint path")->required();
  train_cmd->add_option("--history", tr.history, "per-epoch loss CSV (default <out>.history.csv)");
  train_cmd->add_option("--epochs", tr.cfg.epochs);
  train_cmd->add_option("--seed", tr.seed, "RNG seed (falls back to TIO_SEED)");
  train_cmd->add_option("--lr0", tr.cfg.lr0)->check(CLI::PositiveNumber);
  train_cmd->add_option("--decay", tr.cfg.decay_per_epoch)->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--margin", tr.cfg.margin_alpha)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lambda-gat", tr.cfg.lambda_gat)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--w-cls", tr.cfg.w_cls);
  train_cmd->add_option("--w-ret", tr.cfg.w_ret);
  train_cmd->add_option("--w-gat", tr.cfg.w_gat);
  train_cmd->add_option("--sigma-kernel", tr.cfg.sigma_kernel)->check(CLI::PositiveNumber);
  train_cmd->add_option("--sigma-time", tr.cfg.sigma_time)->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", tr.cfg.batch_size, "videos per step, 0 = all");
  train_cmd->add_option("--d-hidden", tr.cfg.d_hidden, "FFN width, 0 = 2d");
  train_cmd->add_option("--policy", tr.policy)->check(CLI::IsMember({"all", "nearest"}));

  DetectOptions det;
  auto* detect = app.add_subcommand("detect", "frame- and video-level anomaly scores");
  detect->add_option("--data", det.data)->required()->check(CLI::ExistingDirectory);
  detect->add_option("--checkpoint", det.checkpoint)->required()->check(CLI::ExistingFile);
  detect->add_option("--video", det.video, "restrict to one video id");
  detect->add_option("--theta", det.theta, "emit binary decisions score >= theta")->check(CLI::Range(0.0, 1.0));
  detect->add_option("--out", det.out, "scores CSV (default stdout)");
  detect->add_option("--metrics", det.metrics, "video-level AP/AUC CSV");

  RetrieveOptions ret;
  auto* retrieve = app.add_subcommand("retrieve", "rank class keywords for a query video");
  retrieve->add_option("--data", ret.data)->required()->check(CLI::ExistingDirectory);
  retrieve->add_option("--checkpoint", ret.checkpoint)->required()->check(CLI::ExistingFile);
  retrieve->add_option("--video", ret.video)->required();
  retrieve->add_option("--out", ret.out, "ranking CSV (default stdout)");
  retrieve->add_option("--metrics", ret.metrics, "R@k CSV (default stdout)");

  ExplainOptions exp;
  auto* explain = app.add_subcommand("explain", "top attention-weighted triples of a frame as JSON Lines");
  explain->add_option("--data", exp.data)->required()->check(CLI::ExistingDirectory);
  explain->add_option("--checkpoint", exp.checkpoint)->required()->check(CLI::ExistingFile);
  explain->add_option("--video", exp.video)->required();
  explain->add_option("--frame", exp.frame, "1-based frame index")->required();
  explain->add_option("--topk", exp.topk)->check(CLI::PositiveNumber);
  explain->add_option("--policy", exp.policy)->check(CLI::IsMember({"all", "nearest"}));
  explain->add_option("--out", exp.out, "JSONL path (default stdout)");

  BenchOptions bn;
  auto* bench = app.add_subcommand("bench", "op counts and timings of dot-product vs distance-kernel scoring");
  bench->add_option("--n-list", bn.n_list, "ascending sequence lengths")->delimiter(',')->check(CLI::PositiveNumber);
  bench->add_option("--heads", bn.cfg.heads)->check(CLI::PositiveNumber);
  bench->add_option("--dim-in", bn.cfg.input_dim)->check(CLI::PositiveNumber);
  bench->add_option("--dim-head", bn.cfg.head_dim)->check(CLI::PositiveNumber);
  bench->add_option("--repeats", bn.cfg.repeats)->check(CLI::Range(3, 1000000));
  bench->add_option("--max-timed-n", bn.cfg.max_timed_n, "larger n are reported with op counts only");
  bench->add_option("--seed", bn.seed);
  bench->add_option("--out", bn.out, "CSV path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(gen, out);
    if (*train_cmd) return cmd_train(tr, out);
    if (*detect) return cmd_detect(det, out);
    if (*retrieve) return cmd_retrieve(ret, out);
    if (*explain) return cmd_explain(exp, out);
    if (*bench) return cmd_bench(bn, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace tio::cli
