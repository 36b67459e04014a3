#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "corridor/camera.hpp"
#include "corridor/raster.hpp"
#include "corridor/rng.hpp"
#include "corridor/sprite.hpp"

namespace corridor {

struct ObstaclePlacement {
  double distance = 0.0;        // metres to the obstacle's near edge
  double lateral_offset = 0.0;  // metres from the lane centre, positive right
  double physical_width = 0.0;
  double physical_height = 0.0;
  double rotation = 0.0;  // degrees, in the image plane

  bool operator==(const ObstaclePlacement&) const = default;
};

struct ScenarioSpec {
  double lane_width = 3.5;
  double max_corridor_range = 400.0;
  std::optional<ObstaclePlacement> obstacle;
  std::string sprite_id;
  std::uint64_t rng_seed = 0;
  CameraModel camera;
  double feather_radius = 2.0;

  void validate() const {
    camera.validate();
    if (!(lane_width > 0.0)) fail(Errc::invalid_argument, "lane_width must be > 0");
    if (!(max_corridor_range > 0.0)) fail(Errc::invalid_argument, "max_corridor_range must be > 0");
    if (feather_radius < 0.0) fail(Errc::invalid_argument, "feather_radius must be >= 0");
    if (obstacle) {
      if (!(obstacle->distance > 0.0)) fail(Errc::distance_behind_camera, "obstacle distance must be > 0");
      if (!(obstacle->physical_width > 0.0 && obstacle->physical_height > 0.0)) {
        fail(Errc::invalid_argument, "obstacle size must be > 0");
      }
    }
  }
};

struct SceneMeta {
  bool has_obstacle = false;
  double obstacle_distance = 0.0;
  double near_edge_row = 0.0;  // fractional ground row of the obstacle's near edge
  int corridor_top_row = -1;   // first ground-truth corridor row, -1 when empty
  std::string sprite_id;
  std::uint64_t seed = 0;
  double lane_width = 3.5;
  double max_corridor_range = 400.0;
  std::optional<ObstaclePlacement> placement;
  int sprite_px_width = 0;   // composited width before rotation
  int sprite_px_height = 0;

  bool operator==(const SceneMeta&) const = default;
};

struct SceneRecord {
  RgbImage image;
  CorridorMask gt_corridor;
  Mask gt_obstacle;
  SceneMeta meta;
  CameraModel camera;
};

struct RenderOptions {
  bool image = true;  // skip the RGB raster when only ground truth is needed
};

struct PlacementRanges {
  double size_jitter = 0.2;
  double max_rotation_deg = 15.0;
};

/// Top-left corner of a sprite box in image coordinates.
struct PixelPlacement {
  int left = 0;
  int top = 0;
};

/// Uniform lateral offset keeping an object of `width` inside the lane.
inline double sample_lateral_offset(Rng& rng, double lane_width, double width) {
  if (width > lane_width) {
    fail(Errc::infeasible_constraints,
         "object width " + std::to_string(width) + " m exceeds lane width " + std::to_string(lane_width) + " m");
  }
  const double slack = (lane_width - width) / 2.0;
  if (slack <= 0.0) return 0.0;
  return rng.uniform(-slack, slack);
}

/// Random size, lateral offset and rotation of an obstacle at `distance`.
/// Draw order is fixed so a given generator state always yields the same
/// placement.
inline ObstaclePlacement sample_placement(Rng& rng, const ScenarioSpec& spec, const Sprite& sprite, double distance,
                                          const PlacementRanges& ranges = {}) {
  if (!(distance > 0.0)) fail(Errc::distance_behind_camera, "placement distance must be > 0");
  ObstaclePlacement p;
  p.distance = distance;
  const double scale = 1.0 + ranges.size_jitter * (2.0 * rng.uniform01() - 1.0);
  p.physical_width = sprite.width_m * scale;
  p.physical_height = sprite.height_m * scale;
  p.lateral_offset = sample_lateral_offset(rng, spec.lane_width, p.physical_width);
  p.rotation = ranges.max_rotation_deg * (2.0 * rng.uniform01() - 1.0);
  return p;
}

namespace detail {

// Box-filter resample of a sprite to width x height pixels.
inline Sprite resample_sprite(const Sprite& s, int width, int height) {
  Sprite out{s.id, RgbImage(width, height), FloatRaster(width, height, 0.0f), s.width_m, s.height_m};
  const double sx = static_cast<double>(s.native_width()) / width;
  const double sy = static_cast<double>(s.native_height()) / height;
  auto span_of = [](int i, double scale, int limit) {
    int b = static_cast<int>(std::ceil(i * scale - 0.5));
    int e = static_cast<int>(std::ceil((i + 1) * scale - 0.5));
    b = std::clamp(b, 0, limit - 1);
    e = std::clamp(e, b + 1, limit);
    return std::pair{b, e};
  };
  for (int y = 0; y < height; ++y) {
    const auto [r0, r1] = span_of(y, sy, s.native_height());
    for (int x = 0; x < width; ++x) {
      const auto [c0, c1] = span_of(x, sx, s.native_width());
      double a = 0, cr = 0, cg = 0, cb = 0;
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
          const double o = s.opacity(r, c);
          const Rgb8 px = s.color(r, c);
          a += o;
          cr += o * px.r;
          cg += o * px.g;
          cb += o * px.b;
        }
      }
      const double n = static_cast<double>((r1 - r0) * (c1 - c0));
      out.opacity(y, x) = static_cast<float>(a / n);
      if (a > 0) {
        out.color(y, x) = {static_cast<std::uint8_t>(std::lround(cr / a)), static_cast<std::uint8_t>(std::lround(cg / a)),
                           static_cast<std::uint8_t>(std::lround(cb / a))};
      }
    }
  }
  return out;
}

// Nearest-neighbour rotation about the bottom-centre pivot, then binarised
// opacity (labelled object masks are binary) and a tight crop.
inline Sprite rotate_binarize(const Sprite& s, double rotation_deg) {
  const double w = s.native_width();
  const double h = s.native_height();
  const double th = rotation_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(th), st = std::sin(th);
  const double px = w / 2.0, py = h;
  double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
  for (auto [cx, cy] : {std::pair{0.0, 0.0}, std::pair{w, 0.0}, std::pair{0.0, h}, std::pair{w, h}}) {
    const double qx = ct * (cx - px) - st * (cy - py);
    const double qy = st * (cx - px) + ct * (cy - py);
    min_x = std::min(min_x, qx);
    max_x = std::max(max_x, qx);
    min_y = std::min(min_y, qy);
    max_y = std::max(max_y, qy);
  }
  const int ow = std::max(1, static_cast<int>(std::ceil(max_x - min_x - 1e-9)));
  const int oh = std::max(1, static_cast<int>(std::ceil(max_y - min_y - 1e-9)));
  Sprite out{s.id, RgbImage(ow, oh), FloatRaster(ow, oh, 0.0f), s.width_m, s.height_m};
  float best = -1.0f;
  int best_r = 0, best_c = 0;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const double qx = ox + 0.5 + min_x;
      const double qy = oy + 0.5 + min_y;
      const double sx = ct * qx + st * qy + px;
      const double sy = -st * qx + ct * qy + py;
      const int c = static_cast<int>(std::floor(sx));
      const int r = static_cast<int>(std::floor(sy));
      if (r < 0 || c < 0 || r >= s.native_height() || c >= s.native_width()) continue;
      const float a = s.opacity(r, c);
      out.color(oy, ox) = s.color(r, c);
      if (a > best) {
        best = a;
        best_r = oy;
        best_c = ox;
      }
      out.opacity(oy, ox) = a >= 0.5f ? 1.0f : 0.0f;
    }
  }
  // A sub-pixel object keeps its single strongest pixel.
  if (best > 0.0f && best < 0.5f) {
    bool any = false;
    for (float a : out.opacity.pixels()) any = any || a > 0.0f;
    if (!any) out.opacity(best_r, best_c) = 1.0f;
  }
  return trimmed(out);
}

}  // namespace detail

/// Scales a sprite to `width` x `height` pixels and rotates it; the result
/// has binary opacity and a tight box.
inline Sprite transform_sprite(const Sprite& s, int width, int height, double rotation_deg) {
  if (s.native_width() == 0 || s.native_height() == 0) fail(Errc::empty_sprite, "sprite has no pixels");
  return detail::rotate_binarize(detail::resample_sprite(s, std::max(1, width), std::max(1, height)), rotation_deg);
}

/// Gaussian-feathered opacity of a sprite box (sigma = radius / 2, support
/// = radius), zero outside the box.
inline FloatRaster feathered_opacity(const FloatRaster& opacity, double radius) {
  if (radius <= 0.0) return opacity;
  const int k = static_cast<int>(std::ceil(radius));
  const double sigma = radius / 2.0;
  std::vector<double> kernel(static_cast<std::size_t>(2 * k + 1));
  double total = 0.0;
  for (int i = -k; i <= k; ++i) {
    kernel[static_cast<std::size_t>(i + k)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    total += kernel[static_cast<std::size_t>(i + k)];
  }
  for (double& v : kernel) v /= total;
  const int w = opacity.width(), h = opacity.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -k; i <= k; ++i) {
        const int cc = c + i;
        if (cc >= 0 && cc < w) acc += kernel[static_cast<std::size_t>(i + k)] * opacity(r, cc);
      }
      tmp[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)] = acc;
    }
  }
  FloatRaster out(w, h, 0.0f);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -k; i <= k; ++i) {
        const int rr = r + i;
        if (rr >= 0 && rr < h) {
          acc += kernel[static_cast<std::size_t>(i + k)] *
                 tmp[static_cast<std::size_t>(rr) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)];
        }
      }
      out(r, c) = acc > 1.0 - 1e-6 ? 1.0f : static_cast<float>(acc);
    }
  }
  return out;
}

/// Alpha-blends `sprite` into `image` with its top-left corner at
/// `placement`. Pixels outside the sprite box are left unchanged.
inline RgbImage composite_object(const RgbImage& image, const Sprite& sprite, PixelPlacement placement,
                                 double feather_radius) {
  if (sprite.native_width() == 0 || sprite.native_height() == 0) fail(Errc::empty_sprite, "sprite has no pixels");
  if (!sprite.color.same_shape(sprite.opacity)) fail(Errc::incompatible_dimensions, "sprite colour/opacity size");
  const int r0 = std::max(0, placement.top);
  const int r1 = std::min(image.height(), placement.top + sprite.native_height());
  const int c0 = std::max(0, placement.left);
  const int c1 = std::min(image.width(), placement.left + sprite.native_width());
  if (r0 >= r1 || c0 >= c1) fail(Errc::placement_off_image, "sprite box does not intersect the image");
  const FloatRaster alpha = feathered_opacity(sprite.opacity, feather_radius);
  RgbImage out = image;
  auto blend = [](std::uint8_t bg, std::uint8_t fg, double a) {
    return static_cast<std::uint8_t>(std::lround(bg + a * (static_cast<double>(fg) - bg)));
  };
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) {
      const double a = std::clamp<double>(alpha(r - placement.top, c - placement.left), 0.0, 1.0);
      if (a <= 0.0) continue;
      const Rgb8 fg = sprite.color(r - placement.top, c - placement.left);
      Rgb8& px = out(r, c);
      px = {blend(px.r, fg.r, a), blend(px.g, fg.g, a), blend(px.b, fg.b, a)};
    }
  }
  return out;
}

/// Lane polygon rows [top_row, height) of the ego lane.
inline CorridorMask lane_region(const CameraModel& cam, double lane_width, int top_row) {
  CorridorMask m(cam.width, cam.height, 0);
  for (int r = std::max(0, top_row); r < cam.height; ++r) {
    int first = 0, last = -1;
    if (!lane_columns(cam, r, lane_width, first, last)) continue;
    auto px = m.row(r);
    std::fill(px.begin() + first, px.begin() + last + 1, std::uint8_t{1});
  }
  return m;
}

namespace detail {

inline RgbImage render_background(const CameraModel& cam, double lane_width, Rng& rng) {
  RgbImage img(cam.width, cam.height);
  const double road_shade = rng.uniform(80.0, 100.0);
  const double dash_phase = rng.uniform(0.0, 18.0);
  const double horizon = horizon_row(cam);
  const Rgb8 grass{60, 110, 50};
  for (int r = 0; r < cam.height; ++r) {
    auto px = img.row(r);
    if (r <= horizon) {
      const double t = std::clamp(r / std::max(1.0, horizon), 0.0, 1.0);
      const Rgb8 sky{static_cast<std::uint8_t>(150 + 50 * t), static_cast<std::uint8_t>(180 + 35 * t),
                     static_cast<std::uint8_t>(220 + 15 * t)};
      std::fill(px.begin(), px.end(), sky);
      continue;
    }
    const double d = distance_for_ground_row(cam, r);
    const double z = ground_depth(cam, d);
    const bool dash_on = std::fmod(d + dash_phase, 18.0) < 6.0;
    const double half_mark = std::max(0.075, 0.5 * z / cam.focal_length);
    const auto asphalt = static_cast<std::uint8_t>(std::clamp(road_shade + 10.0 * std::min(1.0, 20.0 / d), 0.0, 255.0));
    for (int c = 0; c < cam.width; ++c) {
      const double x = (c - cam.cx) * z / cam.focal_length;
      const double ax = std::abs(x);
      Rgb8 color = grass;
      if (ax <= 1.5 * lane_width + 0.5) {
        color = {asphalt, asphalt, static_cast<std::uint8_t>(asphalt + 4)};
        const bool inner_mark = std::abs(ax - lane_width / 2.0) <= half_mark && dash_on;
        const bool outer_mark = std::abs(ax - 1.5 * lane_width) <= half_mark;
        if (inner_mark || outer_mark) color = {235, 235, 230};
      }
      px[static_cast<std::size_t>(c)] = color;
    }
  }
  return img;
}

}  // namespace detail

/// Renders one test-track scene. With an obstacle present the ground-truth
/// corridor stops at the obstacle's near edge across the whole lane.
inline SceneRecord render_scene(const ScenarioSpec& spec, const SpriteLibrary& library = SpriteLibrary::builtin(),
                                const RenderOptions& options = {}) {
  spec.validate();
  const CameraModel& cam = spec.camera;
  Rng rng(spec.rng_seed);

  SceneRecord rec;
  rec.camera = cam;
  rec.meta.seed = spec.rng_seed;
  rec.meta.lane_width = spec.lane_width;
  rec.meta.max_corridor_range = spec.max_corridor_range;
  rec.meta.sprite_id = spec.sprite_id;
  rec.image = options.image ? detail::render_background(cam, spec.lane_width, rng) : RgbImage();
  rec.gt_obstacle = Mask(cam.width, cam.height, 0);

  int top = first_row_within(cam, spec.max_corridor_range);
  if (spec.obstacle) {
    const ObstaclePlacement& ob = *spec.obstacle;
    const Sprite& sprite = library.get(spec.sprite_id);
    double near_row = 0.0;
    try {
      near_row = ground_row_for_distance(cam, ob.distance);
    } catch (const Error& e) {
      fail(Errc::placement_off_image, std::string("obstacle near edge off image: ") + e.what());
    }
    const int cut = static_cast<int>(std::ceil(near_row - 1e-9));
    top = std::max(top, cut);

    const int wpx = std::max(1, round_half_up(pixel_extent_at_distance(cam, ob.physical_width, ob.distance)));
    const int hpx = std::max(1, round_half_up(pixel_extent_at_distance(cam, ob.physical_height, ob.distance)));
    const Sprite placed = transform_sprite(sprite, wpx, hpx, ob.rotation);
    const double centre = ground_column(cam, ob.distance, ob.lateral_offset);
    PixelPlacement at;
    at.left = round_half_up(centre - placed.native_width() / 2.0);
    at.top = cut - placed.native_height();
    const bool visible = at.top < cam.height && at.top + placed.native_height() > 0 && at.left < cam.width &&
                         at.left + placed.native_width() > 0;
    if (!visible) fail(Errc::placement_off_image, "obstacle sprite falls outside the image");
    if (options.image) rec.image = composite_object(rec.image, placed, at, spec.feather_radius);
    for (int r = 0; r < placed.native_height(); ++r) {
      for (int c = 0; c < placed.native_width(); ++c) {
        if (placed.opacity(r, c) >= 0.5f && rec.gt_obstacle.contains(at.top + r, at.left + c)) {
          rec.gt_obstacle(at.top + r, at.left + c) = 1;
        }
      }
    }
    rec.meta.has_obstacle = true;
    rec.meta.obstacle_distance = ob.distance;
    rec.meta.near_edge_row = near_row;
    rec.meta.placement = ob;
    rec.meta.sprite_px_width = wpx;
    rec.meta.sprite_px_height = hpx;
  }
  rec.gt_corridor = lane_region(cam, spec.lane_width, top);
  rec.meta.corridor_top_row = top_row(rec.gt_corridor);
  return rec;
}

}  // namespace corridor
