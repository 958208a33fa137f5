#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tio/bench.hpp"
#include "tio/bundle.hpp"
#include "tio/checkpoint.hpp"
#include "tio/errors.hpp"
#include "tio/explain.hpp"
#include "tio/gat.hpp"
#include "tio/graph.hpp"
#include "tio/metrics.hpp"
#include "tio/model.hpp"
#include "tio/temporal.hpp"

namespace py = pybind11;
using namespace tio;

namespace {

RelationPolicy parse_policy(const std::string& name) {
  if (name == "all") return RelationPolicy::All;
  if (name == "nearest") return RelationPolicy::NearestKeyword;
  throw Error(ErrorCode::InvalidArgument, "policy must be 'all' or 'nearest', got '" + name + "'");
}

std::size_t video_index(const EmbeddingBundle& bundle, const std::string& id) {
  const auto v = bundle.find_video(id);
  if (!v) throw Error(ErrorCode::InvalidArgument, "unknown video id '" + id + "'");
  return *v;
}

py::dict loss_dict(const LossReport& r) {
  py::dict d;
  d["l_cls"] = r.l_cls;
  d["l_ret"] = r.l_ret;
  d["l_gat"] = r.l_gat;
  d["l_total"] = r.l_total;
  d["skipped_negatives"] = r.skipped_negatives;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distance-kernel graph attention, temporal encoding and evaluation over embedding bundles.";

  static py::exception<Error> error(m, "TioError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::class_<SyntheticSpec>(m, "SyntheticSpec")
      .def(py::init<>())
      .def_readwrite("num_videos", &SyntheticSpec::num_videos)
      .def_readwrite("frames_per_video", &SyntheticSpec::frames_per_video)
      .def_readwrite("dim", &SyntheticSpec::dim)
      .def_readwrite("num_classes", &SyntheticSpec::num_classes)
      .def_readwrite("class_separation", &SyntheticSpec::class_separation)
      .def_readwrite("objects_per_frame", &SyntheticSpec::objects_per_frame)
      .def_readwrite("noise_std", &SyntheticSpec::noise_std)
      .def_readwrite("keywords_per_class", &SyntheticSpec::keywords_per_class)
      .def_readwrite("keyword_noise_std", &SyntheticSpec::keyword_noise_std);

  py::class_<EmbeddingBundle>(m, "Bundle")
      .def_readonly("dim", &EmbeddingBundle::dim)
      .def_readonly("class_names", &EmbeddingBundle::class_names)
      .def_property_readonly("num_classes", &EmbeddingBundle::num_classes)
      .def_property_readonly("video_ids",
                             [](const EmbeddingBundle& b) {
                               std::vector<std::string> ids;
                               for (const auto& v : b.videos) ids.push_back(v.id);
                               return ids;
                             })
      .def_property_readonly("video_labels",
                             [](const EmbeddingBundle& b) {
                               std::vector<std::size_t> labels;
                               for (const auto& v : b.videos) labels.push_back(v.label_index);
                               return labels;
                             })
      .def("frames",
           [](const EmbeddingBundle& b, const std::string& id) {
             const auto& video = b.videos[video_index(b, id)];
             Matrix x(static_cast<Eigen::Index>(video.frames.size()), static_cast<Eigen::Index>(b.dim));
             for (std::size_t t = 0; t < video.frames.size(); ++t) x.row(static_cast<Eigen::Index>(t)) = video.frames[t].embedding.transpose();
             return x;
           })
      .def("__eq__", &bundles_equal);

  m.def("generate_synthetic_bundle", &generate_synthetic_bundle, py::arg("seed"), py::arg("spec") = SyntheticSpec{});
  m.def("load_bundle", &load_bundle, py::arg("path"));
  m.def("write_bundle", &write_bundle, py::arg("bundle"), py::arg("path"));

  m.def("pairwise_distance", py::overload_cast<const Vector&, const Vector&>(&pairwise_distance), py::arg("a"), py::arg("b"));
  m.def(
      "normalize_distances", [](const std::vector<double>& d) { return normalize_distances(d); }, py::arg("distances"));
  m.def(
      "kernel_weights", [](const std::vector<double>& d, double sigma) { return kernel_weights(d, sigma); },
      py::arg("normalized"), py::arg("sigma") = 0.25);

  m.def(
      "frame_attention",
      [](const EmbeddingBundle& b, const std::string& id, double sigma, const std::string& policy) {
        const KnowledgeGraph g = build_graph(b, video_index(b, id), parse_policy(policy));
        GatLayer layer;
        layer.sigma_kernel = sigma;
        const AttentionReport report = attention(g, layer);
        std::vector<std::vector<double>> rows;
        for (std::size_t u = 0; u < g.num_frames; ++u) {
          std::vector<double> alphas;
          for (const auto& e : report.per_node[u]) alphas.push_back(e.alpha);
          rows.push_back(std::move(alphas));
        }
        return rows;
      },
      py::arg("bundle"), py::arg("video_id"), py::arg("sigma") = 0.25, py::arg("policy") = "all",
      "Attention rows of each frame over its objects, in graph order.");

  m.def(
      "temporal_adjacency",
      [](std::size_t n, double sigma) {
        const auto mats = build_temporal_adjacency(n, sigma);
        return py::make_tuple(mats.a_t, mats.a_tilde);
      },
      py::arg("num_frames"), py::arg("sigma") = 3.0);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("lr0", &TrainConfig::lr0)
      .def_readwrite("decay_per_epoch", &TrainConfig::decay_per_epoch)
      .def_readwrite("margin", &TrainConfig::margin_alpha)
      .def_readwrite("lambda_gat", &TrainConfig::lambda_gat)
      .def_readwrite("w_cls", &TrainConfig::w_cls)
      .def_readwrite("w_ret", &TrainConfig::w_ret)
      .def_readwrite("w_gat", &TrainConfig::w_gat)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("sigma_kernel", &TrainConfig::sigma_kernel)
      .def_readwrite("sigma_time", &TrainConfig::sigma_time)
      .def_readwrite("d_hidden", &TrainConfig::d_hidden);

  py::class_<Model>(m, "Model")
      .def_property_readonly("dim", &Model::dim)
      .def_property_readonly("num_classes", &Model::num_classes)
      .def("to_bytes", [](const Model& model) {
        const auto bytes = serialize_checkpoint(model);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      });

  m.def(
      "train",
      [](const EmbeddingBundle& b, const TrainConfig& cfg) {
        TrainResult result;
        {
          py::gil_scoped_release release;
          result = train(b, cfg);
        }
        py::list history;
        for (const auto& rec : result.history) {
          py::dict row = loss_dict(rec.loss);
          row["epoch"] = rec.epoch;
          row["lr"] = rec.lr;
          history.append(row);
        }
        return py::make_tuple(result.model, history);
      },
      py::arg("bundle"), py::arg("config") = TrainConfig{}, "Returns (model, per-epoch loss history).");
  m.def("save_checkpoint", &save_checkpoint, py::arg("model"), py::arg("path"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  m.def(
      "infer",
      [](const Model& model, const EmbeddingBundle& b, const std::string& id) {
        const auto r = infer_video(model, build_graph(b, video_index(b, id)));
        py::dict d;
        d["frame_scores"] = r.frame_scores;
        d["video_score"] = r.video_score;
        d["video_embedding"] = r.video_embedding;
        d["probs"] = r.probs;
        return d;
      },
      py::arg("model"), py::arg("bundle"), py::arg("video_id"));

  m.def(
      "explain",
      [](const Model& model, const EmbeddingBundle& b, const std::string& id, std::size_t frame, std::size_t topk,
         const std::string& policy) {
        const KnowledgeGraph g = build_graph(b, video_index(b, id), parse_policy(policy));
        return explanations_to_jsonl(explain_frame(b, g, attention(g, model.gat), frame, topk));
      },
      py::arg("model"), py::arg("bundle"), py::arg("video_id"), py::arg("frame"), py::arg("topk") = 5,
      py::arg("policy") = "all", "JSON Lines of the frame's top attention-weighted triples.");

  m.def(
      "average_precision",
      [](std::vector<double> scores, std::vector<int> truths) {
        return average_precision(DetectionOutcome{std::move(scores), std::move(truths)});
      },
      py::arg("scores"), py::arg("truths"));
  m.def(
      "auc",
      [](std::vector<double> scores, std::vector<int> truths) {
        return auc(DetectionOutcome{std::move(scores), std::move(truths)});
      },
      py::arg("scores"), py::arg("truths"));
  m.def(
      "recall_at_k",
      [](const Vector& query, const std::vector<Vector>& gallery, std::vector<int> relevance, std::size_t k) {
        RetrievalRanking ranking = rank_gallery(query, gallery);
        if (relevance.size() != gallery.size()) {
          throw Error(ErrorCode::LengthMismatch, "relevance and gallery lengths differ");
        }
        ranking.relevance = std::move(relevance);
        return recall_at_k(ranking, k);
      },
      py::arg("query"), py::arg("gallery"), py::arg("relevance"), py::arg("k"));

  m.def(
      "ops_multihead",
      [](std::uint64_t n, std::uint64_t input_dim, std::uint64_t heads, std::uint64_t head_dim) {
        return ops_multihead({n, input_dim, heads, head_dim});
      },
      py::arg("n"), py::arg("input_dim") = 1024, py::arg("heads") = 8, py::arg("head_dim") = 64);
  m.def(
      "ops_kernel",
      [](std::uint64_t n, std::uint64_t input_dim) { return ops_kernel({n, input_dim, 1, 1}); }, py::arg("n"),
      py::arg("input_dim") = 1024);
}
