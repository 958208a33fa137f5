#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "tio/bundle.hpp"

namespace fixtures {

// Small bundle with uneven object counts (including object-free frames)
// and at most `max_nodes` graph nodes in its single video.
inline tio::EmbeddingBundle random_bundle(std::mt19937_64& rng, std::size_t max_nodes = 20) {
  std::uniform_int_distribution<std::size_t> dim_dist(2, 6);
  std::uniform_int_distribution<std::size_t> frame_dist(1, 5);
  std::uniform_int_distribution<std::size_t> obj_dist(0, 3);
  std::uniform_int_distribution<std::size_t> kw_dist(1, 3);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  tio::EmbeddingBundle b;
  b.dim = dim_dist(rng);
  b.class_names = {"fighting", "normal"};
  auto vec = [&] {
    tio::Vector v(static_cast<Eigen::Index>(b.dim));
    for (auto& x : v) x = noise(rng);
    return v;
  };
  const std::size_t nk = kw_dist(rng);
  for (std::size_t j = 0; j < nk; ++j) {
    b.keywords.push_back({"kw" + std::to_string(j), "keyword " + std::to_string(j), vec(), j % 2});
  }
  tio::VideoRecord video{"vid", 0, {}};
  const std::size_t frames = frame_dist(rng);
  std::size_t nodes = frames;
  for (std::size_t t = 1; t <= frames; ++t) {
    tio::FrameRecord f{t, vec(), {}};
    std::size_t objects = obj_dist(rng);
    while (objects > 0 && nodes + objects > max_nodes) --objects;
    for (std::size_t i = 0; i < objects; ++i) {
      const double x1 = 0.5 * unit(rng), y1 = 0.5 * unit(rng);
      f.objects.push_back({"class" + std::to_string(i), {x1, y1, x1 + 0.4, y1 + 0.4}, vec()});
    }
    nodes += objects;
    video.frames.push_back(std::move(f));
  }
  b.videos.push_back(std::move(video));
  return b;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("tio_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
