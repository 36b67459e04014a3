#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <unistd.h>

#include "corridor/errors.hpp"
#include "corridor/raster.hpp"
#include "corridor/scene.hpp"
#include "corridor/sprite.hpp"

#define EXPECT_ERRC(stmt, errc)                                                            \
  do {                                                                                     \
    try {                                                                                  \
      stmt;                                                                                \
      ADD_FAILURE() << "expected " << corridor::errc_name(errc) << ", nothing was thrown"; \
    } catch (const corridor::Error& e_) {                                                  \
      EXPECT_EQ(corridor::errc_name(e_.code()), corridor::errc_name(errc)) << e_.what();   \
    }                                                                                      \
  } while (0)

namespace corridor::testing {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("corridorpp_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  fs::path path_;
};

inline ScenarioSpec obstacle_spec(double distance, const std::string& sprite = "suitcase", double lateral = 0.0,
                                  std::uint64_t seed = 1) {
  const Sprite& s = SpriteLibrary::builtin().get(sprite);
  ScenarioSpec spec;
  spec.sprite_id = sprite;
  spec.rng_seed = seed;
  spec.obstacle = ObstaclePlacement{distance, lateral, s.width_m, s.height_m, 0.0};
  return spec;
}

inline SceneRecord obstacle_scene(double distance, const std::string& sprite = "suitcase", double lateral = 0.0) {
  return render_scene(obstacle_spec(distance, sprite, lateral), SpriteLibrary::builtin(), RenderOptions{false});
}

inline SceneRecord clean_scene(std::uint64_t seed = 1) {
  ScenarioSpec spec;
  spec.rng_seed = seed;
  return render_scene(spec, SpriteLibrary::builtin(), RenderOptions{false});
}

/// Rows [r0, r1) x columns [c0, c1) set.
inline Mask rect_mask(int width, int height, int r0, int r1, int c0, int c1) {
  Mask m(width, height, 0);
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) m(r, c) = 1;
  }
  return m;
}

}  // namespace corridor::testing
