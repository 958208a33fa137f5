// Embedding bundles: the on-disk stand-in for frozen encoder outputs.
//
// A bundle directory holds `manifest.json` (structure, labels, bounding boxes,
// offsets) and `embeddings.f32` (little-endian float32 vectors, each `dim`
// elements long, addressed by element offset). Vectors are widened to double
// on load; writing narrows them back, so values that originated as float32
// round-trip bit-exactly.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tio/types.hpp"

namespace tio {

struct ObjectEntity {
  std::string class_name;
  std::array<double, 4> bbox{};  // x1, y1, x2, y2 in [0, 1]
  Vector embedding;
};

struct FrameRecord {
  std::size_t t = 1;  // 1-based
  Vector embedding;
  std::vector<ObjectEntity> objects;
};

struct VideoRecord {
  std::string id;
  std::size_t label_index = 0;
  std::vector<FrameRecord> frames;
};

struct KeywordRelation {
  std::string id;
  std::string text;
  Vector embedding;
  std::size_t source_label_index = 0;
};

struct EmbeddingBundle {
  std::size_t dim = 0;
  std::vector<VideoRecord> videos;
  std::vector<KeywordRelation> keywords;
  /// Label set; the non-violence class is always the last entry.
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t non_violence_index() const { return class_names.size() - 1; }
  std::optional<std::size_t> find_video(std::string_view id) const;
};

/// Throws tio::Error on the first violated invariant.
void validate(const EmbeddingBundle& bundle);

/// Bit-exact structural equality (embeddings compared element-wise with ==).
bool bundles_equal(const EmbeddingBundle& a, const EmbeddingBundle& b);

EmbeddingBundle load_bundle(const std::filesystem::path& dir);
void write_bundle(const EmbeddingBundle& bundle, const std::filesystem::path& dir);

struct SyntheticSpec {
  std::size_t num_videos = 8;
  std::size_t frames_per_video = 16;
  std::size_t dim = 16;
  std::size_t num_classes = 2;
  double class_separation = 6.0;
  std::size_t objects_per_frame = 2;
  double noise_std = 1.0;
  std::size_t keywords_per_class = 1;
  double keyword_noise_std = 0.1;
};

/// Deterministic fixture generator.
///
/// Class k's centroid is (class_separation / sqrt(2)) * e_k, so every pair of
/// centroids sits exactly class_separation apart and the geometry does not
/// depend on the seed; only the noise does. Frames and their objects are drawn
/// from an isotropic Gaussian around the centroid of the video's class, and
/// each keyword is its source class centroid plus small noise. Videos are
/// labelled round-robin over the classes. All values are rounded to float32 so
/// generated bundles survive write/load unchanged.
///
/// Requires num_classes <= dim.
EmbeddingBundle generate_synthetic_bundle(std::uint64_t seed, const SyntheticSpec& spec);

}  // namespace tio
