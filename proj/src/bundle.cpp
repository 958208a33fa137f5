#include "tio/bundle.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tio/errors.hpp"

namespace tio {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kBlobName = "embeddings.f32";

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

void check_vector(const Vector& v, std::size_t dim, const std::string& where) {
  if (static_cast<std::size_t>(v.size()) != dim) {
    fail(ErrorCode::DimensionMismatch,
         where + ": vector has " + std::to_string(v.size()) + " components, expected " + std::to_string(dim));
  }
  if (!v.allFinite()) fail(ErrorCode::NonFiniteValue, where + ": embedding contains a non-finite value");
}

bool vectors_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

std::uint32_t to_little_endian(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) | (bits >> 24);
  }
  return bits;
}

// Reads `dim` floats starting at `offset` (element index) from the blob.
class BlobReader {
 public:
  BlobReader(std::vector<float> data, std::size_t dim) : data_(std::move(data)), dim_(dim) {}

  Vector read(const json& offset_field, const std::string& where) const {
    if (!offset_field.is_number_unsigned() && !(offset_field.is_number_integer() && offset_field.get<long long>() >= 0)) {
      fail(ErrorCode::MalformedManifest, where + ": offset must be a non-negative integer");
    }
    const auto offset = offset_field.get<std::size_t>();
    if (offset >= data_.size()) {
      fail(ErrorCode::DanglingReference, where + ": offset " + std::to_string(offset) + " outside blob of " +
                                             std::to_string(data_.size()) + " elements");
    }
    if (offset + dim_ > data_.size()) {
      fail(ErrorCode::DimensionMismatch, where + ": only " + std::to_string(data_.size() - offset) +
                                             " elements available, expected " + std::to_string(dim_));
    }
    Vector v(static_cast<Eigen::Index>(dim_));
    for (std::size_t k = 0; k < dim_; ++k) v[static_cast<Eigen::Index>(k)] = data_[offset + k];
    if (!v.allFinite()) fail(ErrorCode::NonFiniteValue, where + ": embedding contains a non-finite value");
    return v;
  }

 private:
  std::vector<float> data_;
  std::size_t dim_;
};

std::vector<float> read_blob(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) fail(ErrorCode::MalformedManifest, path.string() + ": size is not a multiple of 4 bytes");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(ErrorCode::MalformedManifest, where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedManifest, where + ": field '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

const json& array_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_array()) {
    fail(ErrorCode::MalformedManifest, where + ": field '" + key + "' must be an array");
  }
  return obj.at(key);
}

float narrow(double x) { return static_cast<float>(x); }

}  // namespace

std::optional<std::size_t> EmbeddingBundle::find_video(std::string_view id) const {
  for (std::size_t i = 0; i < videos.size(); ++i) {
    if (videos[i].id == id) return i;
  }
  return std::nullopt;
}

void validate(const EmbeddingBundle& bundle) {
  if (bundle.dim == 0) fail(ErrorCode::MalformedManifest, "dim must be positive");
  if (bundle.class_names.size() < 2) fail(ErrorCode::MalformedManifest, "class_names needs at least two entries");
  std::set<std::string> seen(bundle.class_names.begin(), bundle.class_names.end());
  if (seen.size() != bundle.class_names.size()) fail(ErrorCode::MalformedManifest, "class_names contains duplicates");

  std::set<std::string> keyword_ids;
  for (std::size_t j = 0; j < bundle.keywords.size(); ++j) {
    const auto& kw = bundle.keywords[j];
    const std::string where = "keyword " + kw.id;
    if (!keyword_ids.insert(kw.id).second) fail(ErrorCode::MalformedManifest, where + ": duplicate keyword id");
    if (kw.source_label_index >= bundle.class_names.size()) {
      fail(ErrorCode::MalformedManifest, where + ": source_label_index out of range");
    }
    check_vector(kw.embedding, bundle.dim, where);
  }

  for (const auto& video : bundle.videos) {
    const std::string where = "video " + video.id;
    if (video.label_index >= bundle.class_names.size()) fail(ErrorCode::MalformedManifest, where + ": label_index out of range");
    if (video.frames.empty()) fail(ErrorCode::MalformedManifest, where + ": needs at least one frame");
    for (std::size_t f = 0; f < video.frames.size(); ++f) {
      const auto& frame = video.frames[f];
      const std::string fwhere = where + " frame " + std::to_string(frame.t);
      if (frame.t != f + 1) fail(ErrorCode::MalformedManifest, fwhere + ": frame indices must run 1..T consecutively");
      check_vector(frame.embedding, bundle.dim, fwhere);
      for (const auto& obj : frame.objects) {
        const auto& b = obj.bbox;
        for (double c : b) {
          if (!std::isfinite(c)) fail(ErrorCode::NonFiniteValue, fwhere + ": bbox is not finite");
          if (c < 0.0 || c > 1.0) fail(ErrorCode::MalformedManifest, fwhere + ": bbox coordinate outside [0,1]");
        }
        if (b[0] > b[2] || b[1] > b[3]) fail(ErrorCode::MalformedManifest, fwhere + ": bbox corners out of order");
        check_vector(obj.embedding, bundle.dim, fwhere + " object " + obj.class_name);
      }
    }
  }
}

bool bundles_equal(const EmbeddingBundle& a, const EmbeddingBundle& b) {
  if (a.dim != b.dim || a.class_names != b.class_names) return false;
  if (a.keywords.size() != b.keywords.size() || a.videos.size() != b.videos.size()) return false;
  for (std::size_t j = 0; j < a.keywords.size(); ++j) {
    const auto& x = a.keywords[j];
    const auto& y = b.keywords[j];
    if (x.id != y.id || x.text != y.text || x.source_label_index != y.source_label_index ||
        !vectors_equal(x.embedding, y.embedding)) {
      return false;
    }
  }
  for (std::size_t v = 0; v < a.videos.size(); ++v) {
    const auto& x = a.videos[v];
    const auto& y = b.videos[v];
    if (x.id != y.id || x.label_index != y.label_index || x.frames.size() != y.frames.size()) return false;
    for (std::size_t f = 0; f < x.frames.size(); ++f) {
      const auto& fx = x.frames[f];
      const auto& fy = y.frames[f];
      if (fx.t != fy.t || !vectors_equal(fx.embedding, fy.embedding) || fx.objects.size() != fy.objects.size()) return false;
      for (std::size_t i = 0; i < fx.objects.size(); ++i) {
        const auto& ox = fx.objects[i];
        const auto& oy = fy.objects[i];
        if (ox.class_name != oy.class_name || ox.bbox != oy.bbox || !vectors_equal(ox.embedding, oy.embedding)) return false;
      }
    }
  }
  return true;
}

EmbeddingBundle load_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  std::ifstream in(manifest_path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::MalformedManifest, std::string("invalid JSON: ") + e.what());
  }
  if (!manifest.is_object()) fail(ErrorCode::MalformedManifest, "manifest root must be an object");

  EmbeddingBundle bundle;
  const auto dim = field<long long>(manifest, "dim", "manifest");
  if (dim <= 0) fail(ErrorCode::MalformedManifest, "dim must be positive");
  bundle.dim = static_cast<std::size_t>(dim);
  bundle.class_names = field<std::vector<std::string>>(manifest, "class_names", "manifest");

  const BlobReader blob(read_blob(dir / kBlobName), bundle.dim);

  for (const auto& kw : array_field(manifest, "keywords", "manifest")) {
    KeywordRelation rel;
    rel.id = field<std::string>(kw, "id", "keyword");
    const std::string where = "keyword " + rel.id;
    rel.text = field<std::string>(kw, "text", where);
    rel.source_label_index = field<std::size_t>(kw, "source_label_index", where);
    if (!kw.contains("offset")) fail(ErrorCode::MalformedManifest, where + ": missing field 'offset'");
    rel.embedding = blob.read(kw.at("offset"), where);
    bundle.keywords.push_back(std::move(rel));
  }

  for (const auto& jv : array_field(manifest, "videos", "manifest")) {
    VideoRecord video;
    video.id = field<std::string>(jv, "id", "video");
    const std::string where = "video " + video.id;
    video.label_index = field<std::size_t>(jv, "label_index", where);
    for (const auto& jf : array_field(jv, "frames", where)) {
      FrameRecord frame;
      frame.t = field<std::size_t>(jf, "t", where + " frame");
      const std::string fwhere = where + " frame " + std::to_string(frame.t);
      if (!jf.contains("offset")) fail(ErrorCode::MalformedManifest, fwhere + ": missing field 'offset'");
      frame.embedding = blob.read(jf.at("offset"), fwhere);
      if (jf.contains("objects")) {
        for (const auto& jo : array_field(jf, "objects", fwhere)) {
          ObjectEntity obj;
          obj.class_name = field<std::string>(jo, "class_name", fwhere + " object");
          const auto bbox = field<std::vector<double>>(jo, "bbox", fwhere + " object");
          if (bbox.size() != 4) fail(ErrorCode::MalformedManifest, fwhere + ": bbox needs 4 coordinates");
          std::copy(bbox.begin(), bbox.end(), obj.bbox.begin());
          if (!jo.contains("offset")) fail(ErrorCode::MalformedManifest, fwhere + ": object missing 'offset'");
          obj.embedding = blob.read(jo.at("offset"), fwhere + " object " + obj.class_name);
          frame.objects.push_back(std::move(obj));
        }
      }
      video.frames.push_back(std::move(frame));
    }
    bundle.videos.push_back(std::move(video));
  }

  validate(bundle);
  return bundle;
}

void write_bundle(const EmbeddingBundle& bundle, const fs::path& dir) {
  validate(bundle);

  std::vector<float> blob;
  auto append = [&](const Vector& v) {
    const std::size_t offset = blob.size();
    for (Eigen::Index k = 0; k < v.size(); ++k) blob.push_back(narrow(v[k]));
    return offset;
  };

  json manifest;
  manifest["dim"] = bundle.dim;
  manifest["class_names"] = bundle.class_names;
  manifest["keywords"] = json::array();
  for (const auto& kw : bundle.keywords) {
    manifest["keywords"].push_back({{"id", kw.id},
                                    {"text", kw.text},
                                    {"source_label_index", kw.source_label_index},
                                    {"offset", append(kw.embedding)}});
  }
  manifest["videos"] = json::array();
  for (const auto& video : bundle.videos) {
    json jv{{"id", video.id}, {"label_index", video.label_index}, {"frames", json::array()}};
    for (const auto& frame : video.frames) {
      json jf{{"t", frame.t}, {"offset", append(frame.embedding)}, {"objects", json::array()}};
      for (const auto& obj : frame.objects) {
        jf["objects"].push_back({{"class_name", obj.class_name},
                                 {"bbox", {obj.bbox[0], obj.bbox[1], obj.bbox[2], obj.bbox[3]}},
                                 {"offset", append(obj.embedding)}});
      }
      jv["frames"].push_back(std::move(jf));
    }
    manifest["videos"].push_back(std::move(jv));
  }

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());

  {
    std::ofstream out(dir / kManifestName, std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot write " + (dir / kManifestName).string());
    out << manifest.dump(2) << '\n';
    if (!out) fail(ErrorCode::IoFailure, "write failed for " + (dir / kManifestName).string());
  }
  std::ofstream out(dir / kBlobName, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + (dir / kBlobName).string());
  for (float x : blob) {
    const std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(x));
    char bytes[4];
    for (int b = 0; b < 4; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    out.write(bytes, 4);
  }
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + (dir / kBlobName).string());
}

EmbeddingBundle generate_synthetic_bundle(std::uint64_t seed, const SyntheticSpec& spec) {
  if (spec.num_videos == 0 || spec.frames_per_video == 0 || spec.dim == 0 || spec.num_classes == 0 ||
      spec.objects_per_frame == 0 || spec.keywords_per_class == 0) {
    fail(ErrorCode::InvalidSpec, "all counts must be at least 1");
  }
  if (spec.num_classes < 2) fail(ErrorCode::InvalidSpec, "need at least two classes (one is non-violence)");
  if (spec.num_classes > spec.dim) fail(ErrorCode::InvalidSpec, "num_classes must not exceed dim");
  if (!(spec.class_separation >= 0.0) || !std::isfinite(spec.class_separation)) {
    fail(ErrorCode::InvalidSpec, "class_separation must be finite and non-negative");
  }
  if (!(spec.noise_std >= 0.0) || !(spec.keyword_noise_std >= 0.0)) fail(ErrorCode::InvalidSpec, "noise must be non-negative");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(spec.dim);

  const double scale = spec.class_separation / std::sqrt(2.0);
  std::vector<Vector> centroids;
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    Vector c = Vector::Zero(d);
    c[static_cast<Eigen::Index>(k)] = scale;
    centroids.push_back(std::move(c));
  }
  auto sample = [&](const Vector& centre, double std_dev) {
    Vector v(d);
    for (Eigen::Index k = 0; k < d; ++k) v[k] = narrow(centre[k] + std_dev * gauss(rng));
    return v;
  };

  EmbeddingBundle bundle;
  bundle.dim = spec.dim;
  for (std::size_t k = 0; k + 1 < spec.num_classes; ++k) bundle.class_names.push_back("violence_" + std::to_string(k));
  bundle.class_names.push_back("non_violence");

  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    for (std::size_t r = 0; r < spec.keywords_per_class; ++r) {
      KeywordRelation kw;
      kw.id = "kw_" + std::to_string(k) + "_" + std::to_string(r);
      kw.text = "cue " + std::to_string(r) + " of " + bundle.class_names[k];
      kw.source_label_index = k;
      kw.embedding = sample(centroids[k], spec.keyword_noise_std);
      bundle.keywords.push_back(std::move(kw));
    }
  }

  for (std::size_t v = 0; v < spec.num_videos; ++v) {
    VideoRecord video;
    video.id = "video_" + std::to_string(v);
    video.label_index = v % spec.num_classes;
    const Vector& centre = centroids[video.label_index];
    for (std::size_t t = 1; t <= spec.frames_per_video; ++t) {
      FrameRecord frame;
      frame.t = t;
      frame.embedding = sample(centre, spec.noise_std);
      for (std::size_t i = 0; i < spec.objects_per_frame; ++i) {
        ObjectEntity obj;
        obj.class_name = "object_" + std::to_string(video.label_index) + "_" + std::to_string(i);
        const double x1 = narrow(0.5 * unit(rng));
        const double y1 = narrow(0.5 * unit(rng));
        const double x2 = narrow(x1 + 0.5 * unit(rng));
        const double y2 = narrow(y1 + 0.5 * unit(rng));
        obj.bbox = {x1, y1, std::max(x1, x2), std::max(y1, y2)};
        obj.embedding = sample(centre, spec.noise_std);
        frame.objects.push_back(std::move(obj));
      }
      video.frames.push_back(std::move(frame));
    }
    bundle.videos.push_back(std::move(video));
  }
  return bundle;
}

}  // namespace tio
