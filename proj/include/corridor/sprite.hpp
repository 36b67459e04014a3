#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "corridor/raster.hpp"

namespace corridor {

/// Obstacle cut-out: colour raster plus per-pixel opacity in [0, 1], and the
/// physical size the cut-out represents.
struct Sprite {
  std::string id;
  RgbImage color;
  FloatRaster opacity;
  double width_m = 0.5;
  double height_m = 0.5;

  int native_width() const noexcept { return opacity.width(); }
  int native_height() const noexcept { return opacity.height(); }
};

/// Crops a sprite to the tight bounding box of its non-transparent pixels.
inline Sprite trimmed(const Sprite& s) {
  int r0 = s.opacity.height(), r1 = -1, c0 = s.opacity.width(), c1 = -1;
  for (int r = 0; r < s.opacity.height(); ++r) {
    for (int c = 0; c < s.opacity.width(); ++c) {
      if (s.opacity(r, c) > 0.0f) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
    }
  }
  if (r1 < 0) fail(Errc::empty_sprite, "sprite '" + s.id + "' is fully transparent");
  Sprite out{s.id, RgbImage(c1 - c0 + 1, r1 - r0 + 1), FloatRaster(c1 - c0 + 1, r1 - r0 + 1), s.width_m, s.height_m};
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      out.color(r - r0, c - c0) = s.color(r, c);
      out.opacity(r - r0, c - c0) = s.opacity(r, c);
    }
  }
  return out;
}

class SpriteLibrary {
 public:
  void add(Sprite sprite) {
    if (contains(sprite.id)) fail(Errc::invalid_argument, "duplicate sprite id '" + sprite.id + "'");
    sprites_.push_back(trimmed(sprite));
  }

  bool contains(std::string_view id) const {
    return std::any_of(sprites_.begin(), sprites_.end(), [&](const Sprite& s) { return s.id == id; });
  }

  const Sprite& get(std::string_view id) const {
    for (const Sprite& s : sprites_) {
      if (s.id == id) return s;
    }
    fail(Errc::sprite_not_found, "no sprite named '" + std::string(id) + "'");
  }

  const Sprite& at(std::size_t i) const { return sprites_.at(i); }
  std::size_t size() const noexcept { return sprites_.size(); }

  static const SpriteLibrary& builtin();

 private:
  std::vector<Sprite> sprites_;
};

namespace detail {

enum class Shape { box, ellipse, cone, log, ring, bag, slatted, canister };

struct SpriteRecipe {
  const char* id;
  Shape shape;
  double width_m;
  double height_m;
  Rgb8 color;
};

// 28 lost-cargo stand-ins; heights stay >= 0.75 m so that, with the size
// jitter of the protocol, the far bins still cover several pixel rows.
inline constexpr SpriteRecipe kRecipes[] = {
    {"suitcase", Shape::box, 0.70, 0.80, {40, 40, 120}},
    {"tire", Shape::ring, 0.75, 0.75, {25, 25, 25}},
    {"cardboard_box", Shape::box, 0.80, 0.80, {170, 130, 80}},
    {"tree_stem", Shape::log, 1.50, 0.75, {110, 80, 50}},
    {"pallet", Shape::slatted, 1.20, 0.75, {190, 160, 110}},
    {"traffic_cone", Shape::cone, 0.60, 0.90, {240, 100, 20}},
    {"gas_canister", Shape::canister, 0.60, 0.80, {200, 30, 30}},
    {"water_barrel", Shape::box, 0.60, 0.90, {30, 90, 170}},
    {"mattress", Shape::box, 1.40, 0.80, {220, 220, 200}},
    {"garbage_bag", Shape::bag, 0.80, 0.80, {15, 15, 15}},
    {"toolbox", Shape::box, 0.65, 0.75, {200, 40, 40}},
    {"crate", Shape::slatted, 0.90, 0.80, {150, 110, 60}},
    {"cushion", Shape::ellipse, 0.90, 0.75, {180, 60, 120}},
    {"ladder", Shape::slatted, 1.40, 0.80, {180, 180, 190}},
    {"paint_bucket", Shape::canister, 0.60, 0.75, {230, 230, 230}},
    {"tarp_bundle", Shape::bag, 1.20, 0.80, {30, 120, 60}},
    {"exhaust_pipe", Shape::log, 1.40, 0.75, {120, 120, 120}},
    {"plastic_chair", Shape::cone, 0.60, 0.90, {240, 240, 240}},
    {"rock", Shape::ellipse, 0.70, 0.75, {120, 110, 100}},
    {"sack", Shape::bag, 0.70, 0.80, {200, 190, 150}},
    {"spare_wheel", Shape::ring, 0.75, 0.80, {40, 40, 40}},
    {"cooler_box", Shape::box, 0.80, 0.75, {70, 160, 200}},
    {"sign_board", Shape::box, 1.00, 0.80, {250, 250, 250}},
    {"cable_drum", Shape::ring, 1.00, 1.00, {160, 120, 70}},
    {"helmet", Shape::ellipse, 0.60, 0.75, {250, 220, 0}},
    {"ottoman", Shape::box, 0.75, 0.75, {100, 60, 40}},
    {"lumber_stack", Shape::slatted, 1.50, 0.80, {200, 170, 120}},
    {"duffel_bag", Shape::bag, 0.90, 0.75, {90, 40, 90}},
};

inline bool shape_covers(Shape shape, double u, double v) {
  const double x = 2.0 * u - 1.0;  // [-1, 1], left to right
  const double y = 2.0 * v - 1.0;  // [-1, 1], top to bottom
  switch (shape) {
    case Shape::box:
      return true;
    case Shape::ellipse:
      return x * x + y * y <= 1.0;
    case Shape::cone:
      return std::abs(x) <= 0.25 + 0.75 * v || v > 0.9;
    case Shape::log: {
      const double cap = 0.35;
      const double ax = std::max(0.0, std::abs(x) - (1.0 - cap)) / cap;
      return ax * ax + y * y <= 1.0;
    }
    case Shape::ring: {
      const double r2 = x * x + y * y;
      return r2 <= 1.0 && r2 >= 0.16;
    }
    case Shape::bag: {
      const double r = std::sqrt(x * x + y * y);
      const double theta = std::atan2(y, x);
      return r <= 0.88 + 0.12 * std::sin(3.0 * theta + 0.7) || v > 0.92;
    }
    case Shape::slatted: {
      const bool leg = std::abs(x) > 0.8 || std::abs(x) < 0.15;
      const bool slat = std::fmod(v * 5.0, 1.0) < 0.6;
      return leg || slat;
    }
    case Shape::canister: {
      const bool handle_gap = v < 0.18 && std::abs(x) < 0.35;
      return !handle_gap;
    }
  }
  return false;
}

inline Sprite render_recipe(const SpriteRecipe& recipe) {
  constexpr int native_w = 96;
  const int native_h = std::max(16, static_cast<int>(std::lround(native_w * recipe.height_m / recipe.width_m)));
  Sprite s{recipe.id, RgbImage(native_w, native_h), FloatRaster(native_w, native_h, 0.0f), recipe.width_m,
           recipe.height_m};
  for (int r = 0; r < native_h; ++r) {
    const double v = (r + 0.5) / native_h;
    const double shade = 1.1 - 0.3 * v;
    for (int c = 0; c < native_w; ++c) {
      const double u = (c + 0.5) / native_w;
      // Edge pixels always count so the native raster is tight.
      const bool edge = r == 0 || r == native_h - 1 || c == 0 || c == native_w - 1;
      const bool core = (r == native_h / 2) || (c == native_w / 2);
      if (!shape_covers(recipe.shape, u, v) && !(edge && core)) continue;
      const double stripe = ((c / 8 + r / 8) % 2 == 0) ? 1.0 : 0.88;
      auto tint = [&](std::uint8_t ch) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(ch * shade * stripe), 0L, 255L));
      };
      s.color(r, c) = {tint(recipe.color.r), tint(recipe.color.g), tint(recipe.color.b)};
      s.opacity(r, c) = 1.0f;
    }
  }
  return s;
}

}  // namespace detail

inline const SpriteLibrary& SpriteLibrary::builtin() {
  static const SpriteLibrary lib = [] {
    SpriteLibrary l;
    for (const auto& recipe : detail::kRecipes) l.add(detail::render_recipe(recipe));
    return l;
  }();
  return lib;
}

}  // namespace corridor
