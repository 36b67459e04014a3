#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "corridor/camera.hpp"
#include "corridor/energy.hpp"
#include "corridor/raster.hpp"
#include "corridor/rng.hpp"
#include "corridor/scene.hpp"

namespace corridor {

enum class CorruptionKind { clean, wrap, miss_near, holes, edge_jitter, far_noise };

/// One corruption step; the meaning of the parameters depends on the kind:
///   miss_near  : a = distance threshold [m]
///   holes      : a = flip probability
///   edge_jitter: a = boundary sigma [px]
///   far_noise  : a = probability, b = minimum distance [m]
struct Corruption {
  CorruptionKind kind = CorruptionKind::clean;
  double a = 0.0;
  double b = 0.0;

  bool operator==(const Corruption&) const = default;
};

/// Ordered list of corruption steps applied to the ground-truth corridor.
struct CorruptionConfig {
  std::vector<Corruption> modes;
  std::uint64_t rng_seed = 0;

  void validate() const {
    for (const Corruption& m : modes) {
      switch (m.kind) {
        case CorruptionKind::holes:
          if (!(m.a >= 0.0 && m.a <= 1.0)) fail(Errc::invalid_argument, "holes probability must be in [0, 1]");
          break;
        case CorruptionKind::edge_jitter:
          if (!(m.a >= 0.0)) fail(Errc::invalid_argument, "edge_jitter sigma must be >= 0");
          break;
        case CorruptionKind::far_noise:
          if (!(m.a >= 0.0 && m.a <= 1.0)) fail(Errc::invalid_argument, "far_noise probability must be in [0, 1]");
          break;
        default:
          break;
      }
    }
  }
};

namespace detail {

inline double parse_number(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    fail(Errc::config_parse_error, "bad number '" + std::string(s) + "' in " + std::string(what));
  }
  return v;
}

}  // namespace detail

/// Parses "wrap,holes:0.005,miss_near:60,far_noise:0.001:150". An empty
/// string or "clean" means no corruption.
inline CorruptionConfig parse_corruptions(std::string_view text, std::uint64_t seed = 0) {
  CorruptionConfig cfg;
  cfg.rng_seed = seed;
  std::size_t pos = 0;
  while (pos <= text.size() && !text.empty()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) {
      if (comma == text.size()) break;
      continue;
    }
    std::vector<std::string_view> parts;
    std::size_t p = 0;
    while (true) {
      const std::size_t colon = item.find(':', p);
      parts.push_back(item.substr(p, colon == std::string_view::npos ? std::string_view::npos : colon - p));
      if (colon == std::string_view::npos) break;
      p = colon + 1;
    }
    const std::string_view name = parts[0];
    auto arg = [&](std::size_t i, double fallback) {
      return parts.size() > i ? detail::parse_number(parts[i], item) : fallback;
    };
    Corruption c;
    if (name == "clean") {
      c.kind = CorruptionKind::clean;
    } else if (name == "wrap") {
      c.kind = CorruptionKind::wrap;
    } else if (name == "miss_near") {
      c.kind = CorruptionKind::miss_near;
      c.a = arg(1, 60.0);
    } else if (name == "holes") {
      c.kind = CorruptionKind::holes;
      c.a = arg(1, 0.005);
    } else if (name == "edge_jitter") {
      c.kind = CorruptionKind::edge_jitter;
      c.a = arg(1, 1.0);
    } else if (name == "far_noise") {
      c.kind = CorruptionKind::far_noise;
      c.a = arg(1, 0.001);
      c.b = arg(2, 150.0);
    } else {
      fail(Errc::config_parse_error, "unknown corruption '" + std::string(name) + "'");
    }
    if (c.kind != CorruptionKind::clean) cfg.modes.push_back(c);
    if (comma == text.size()) break;
  }
  cfg.validate();
  return cfg;
}

inline std::string format_corruptions(const CorruptionConfig& cfg) {
  std::string out;
  for (const Corruption& c : cfg.modes) {
    if (!out.empty()) out += ',';
    char buf[64];
    switch (c.kind) {
      case CorruptionKind::clean: out += "clean"; break;
      case CorruptionKind::wrap: out += "wrap"; break;
      case CorruptionKind::miss_near: std::snprintf(buf, sizeof buf, "miss_near:%g", c.a); out += buf; break;
      case CorruptionKind::holes: std::snprintf(buf, sizeof buf, "holes:%g", c.a); out += buf; break;
      case CorruptionKind::edge_jitter: std::snprintf(buf, sizeof buf, "edge_jitter:%g", c.a); out += buf; break;
      case CorruptionKind::far_noise: std::snprintf(buf, sizeof buf, "far_noise:%g:%g", c.a, c.b); out += buf; break;
    }
  }
  return out.empty() ? "clean" : out;
}

struct SegmenterConfig {
  int classes = 19;
  float inlier_logit = 8.0f;    // score of the winning class at inlier pixels
  float outlier_logit = -3.0f;  // uniform score of every class at obstacle pixels
  // Each side channel left beside an obstacle by the wrap corruption, as a
  // fraction of the lane width at that row.
  double wrap_channel_fraction = 0.25;

  void validate() const {
    if (classes < 2) fail(Errc::invalid_argument, "segmenter needs at least 2 classes");
    if (!(wrap_channel_fraction > 0.0 && wrap_channel_fraction < 0.5)) {
      fail(Errc::invalid_argument, "wrap_channel_fraction must be in (0, 0.5)");
    }
  }
};

struct Segmentation {
  LogitVolume logits;
  CorridorMask mask;
};

inline constexpr int kCorridorClass = 0;
inline constexpr int kRoadClass = 1;
inline int sky_class(int classes) { return std::min(2, classes - 1); }

namespace detail {

inline void check_scene(const SceneRecord& scene) {
  const CameraModel& cam = scene.camera;
  if (scene.gt_corridor.width() != cam.width || scene.gt_corridor.height() != cam.height) {
    fail(Errc::incompatible_dimensions, "ground-truth corridor does not match the camera image size");
  }
  require_same_shape(scene.gt_corridor, scene.gt_obstacle, "corridor vs obstacle mask");
  if (!scene.image.empty()) require_same_shape(scene.gt_corridor, scene.image, "corridor mask vs image");
}

/// Corridor that flows around the obstacle: on the obstacle's rows only a
/// channel along each lane boundary survives, and the lane continues past
/// the obstacle up to the maximum range.
inline void apply_wrap(const SceneRecord& scene, CorridorMask& mask, const SegmenterConfig& cfg) {
  if (!scene.meta.has_obstacle) return;
  const CameraModel& cam = scene.camera;
  const int full_top = first_row_within(cam, scene.meta.max_corridor_range);
  CorridorMask lane = lane_region(cam, scene.meta.lane_width, full_top);
  for (int r = 0; r < mask.height(); ++r) {
    const auto obst = scene.gt_obstacle.row(r);
    int o0 = mask.width(), o1 = -1;
    for (int c = 0; c < mask.width(); ++c) {
      if (obst[static_cast<std::size_t>(c)]) {
        o0 = std::min(o0, c);
        o1 = std::max(o1, c);
      }
    }
    auto out = mask.row(r);
    const auto in = lane.row(r);
    int first = 0, last = -1;
    const bool has_lane = lane_columns(cam, r, scene.meta.lane_width, first, last) && r >= full_top;
    if (o1 < 0 || !has_lane) {
      for (int c = 0; c < mask.width(); ++c) out[static_cast<std::size_t>(c)] |= in[static_cast<std::size_t>(c)];
      continue;
    }
    const int channel = std::max(1, round_half_up(cfg.wrap_channel_fraction * (last - first + 1)));
    for (int c = first; c <= last; ++c) out[static_cast<std::size_t>(c)] = 0;
    const int block0 = o0 - 1, block1 = o1 + 1;
    for (int c = first; c < std::min(first + channel, last + 1); ++c) {
      if (c < block0 || c > block1) out[static_cast<std::size_t>(c)] = 1;
    }
    for (int c = std::max(first, last - channel + 1); c <= last; ++c) {
      if (c < block0 || c > block1) out[static_cast<std::size_t>(c)] = 1;
    }
  }
}

inline void apply_miss_near(const SceneRecord& scene, CorridorMask& mask, double threshold) {
  if (!scene.meta.has_obstacle || !(scene.meta.obstacle_distance < threshold)) return;
  const CameraModel& cam = scene.camera;
  const CorridorMask lane = lane_region(cam, scene.meta.lane_width, first_row_within(cam, scene.meta.max_corridor_range));
  auto out = mask.pixels();
  const auto in = lane.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] |= in[i];
}

// Interior: set pixel whose four neighbours are all set.
inline void apply_holes(CorridorMask& mask, double p, Rng& rng) {
  const CorridorMask src = mask;
  for (int r = 1; r + 1 < mask.height(); ++r) {
    for (int c = 1; c + 1 < mask.width(); ++c) {
      if (src(r, c) && src(r - 1, c) && src(r + 1, c) && src(r, c - 1) && src(r, c + 1)) {
        if (rng.bernoulli(p)) mask(r, c) = 0;
      }
    }
  }
}

inline void apply_edge_jitter(CorridorMask& mask, double sigma, Rng& rng) {
  for (int r = 0; r < mask.height(); ++r) {
    auto px = mask.row(r);
    int first = -1, last = -1;
    for (int c = 0; c < mask.width(); ++c) {
      if (px[static_cast<std::size_t>(c)]) {
        if (first < 0) first = c;
        last = c;
      }
    }
    if (first < 0) continue;
    const int nf = std::clamp(first + round_half_up(sigma * rng.normal()), 0, mask.width() - 1);
    const int nl = std::clamp(last + round_half_up(sigma * rng.normal()), 0, mask.width() - 1);
    std::fill(px.begin(), px.end(), std::uint8_t{0});
    if (nf <= nl) std::fill(px.begin() + nf, px.begin() + nl + 1, std::uint8_t{1});
  }
}

}  // namespace detail

/// Corridor mask the oracle would predict for `scene` under `cfg`.
inline CorridorMask segment_mask(const SceneRecord& scene, const CorruptionConfig& cfg,
                                 const SegmenterConfig& seg = {}) {
  detail::check_scene(scene);
  cfg.validate();
  seg.validate();
  Rng rng(derive_seed(cfg.rng_seed, hash_tag("segment-mask")));
  CorridorMask mask = scene.gt_corridor;
  for (const Corruption& c : cfg.modes) {
    switch (c.kind) {
      case CorruptionKind::clean: break;
      case CorruptionKind::wrap: detail::apply_wrap(scene, mask, seg); break;
      case CorruptionKind::miss_near: detail::apply_miss_near(scene, mask, c.a); break;
      case CorruptionKind::holes: detail::apply_holes(mask, c.a, rng); break;
      case CorruptionKind::edge_jitter: detail::apply_edge_jitter(mask, c.a, rng); break;
      case CorruptionKind::far_noise: break;
    }
  }
  return mask;
}

/// Oracle network output: per-class logits and the corridor mask. Inlier
/// pixels score `inlier_logit` for their class and 0 elsewhere; obstacle
/// pixels (and far_noise speckles) score `outlier_logit` for every class.
inline Segmentation segment(const SceneRecord& scene, const CorruptionConfig& cfg, const SegmenterConfig& seg = {}) {
  Segmentation out;
  out.mask = segment_mask(scene, cfg, seg);
  const CameraModel& cam = scene.camera;
  const int w = cam.width, h = cam.height, k = seg.classes;
  out.logits = LogitVolume(w, h, k, 0.0f);

  Mask outlier = scene.gt_obstacle;
  Rng rng(derive_seed(cfg.rng_seed, hash_tag("segment-logits")));
  for (const Corruption& c : cfg.modes) {
    if (c.kind != CorruptionKind::far_noise || c.a <= 0.0) continue;
    const double horizon = horizon_row(cam);
    int last_row = -1;
    try {
      last_row = std::min(h - 1, static_cast<int>(std::floor(project_ground_row(cam, c.b))));
    } catch (const Error&) {
    }
    for (int r = std::max(0, static_cast<int>(std::floor(horizon)) + 1); r <= last_row; ++r) {
      for (int col = 0; col < w; ++col) {
        if (rng.bernoulli(c.a)) outlier(r, col) = 1;
      }
    }
  }

  const int sky = sky_class(k);
  const double horizon = horizon_row(cam);
  for (int r = 0; r < h; ++r) {
    const int background = r <= horizon ? sky : kRoadClass;
    const auto m = out.mask.row(r);
    const auto o = outlier.row(r);
    const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(w);
    for (int col = 0; col < w; ++col) {
      const auto c = static_cast<std::size_t>(col);
      if (o[c]) {
        for (int cls = 0; cls < k; ++cls) out.logits.plane(cls)[base + c] = seg.outlier_logit;
      } else {
        const int cls = m[c] ? kCorridorClass : background;
        out.logits.plane(cls)[base + c] = seg.inlier_logit;
      }
    }
  }
  return out;
}

}  // namespace corridor
