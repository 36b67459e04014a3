#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "corridor/camera.hpp"
#include "corridor/raster.hpp"
#include "corridor/runs.hpp"

namespace corridor {

struct FusionConfig {
  float energy_threshold = -2.0f;
  int min_blob_area = 20;
  int blob_dilation = 1;
  // Raise the area floor for far rows to the footprint of a square object of
  // `min_object_size_m` at that row's distance.
  bool row_dependent_min_area = false;
  double min_object_size_m = 0.15;

  void validate() const {
    if (!std::isfinite(energy_threshold)) fail(Errc::invalid_argument, "energy threshold must be finite");
    if (min_blob_area < 1) fail(Errc::invalid_argument, "min_blob_area must be >= 1");
    if (blob_dilation < 0) fail(Errc::invalid_argument, "blob_dilation must be >= 0");
  }
};

struct PixelRun {
  int row = 0;
  int begin = 0;
  int end = 0;

  bool operator==(const PixelRun&) const = default;
};

struct BoundingBox {
  int min_row = 0;
  int max_row = -1;
  int min_col = 0;
  int max_col = -1;
};

/// Connected group of outlier pixels. `runs` holds the thresholded pixels
/// themselves; dilation only decides which pixels belong together.
struct OutlierBlob {
  std::vector<PixelRun> runs;
  std::int64_t area = 0;
  BoundingBox bbox;
  int nearest_row = -1;  // largest row index, i.e. closest to the vehicle
};

inline std::int64_t row_min_area(const FusionConfig& cfg, const CameraModel* cam, int row) {
  std::int64_t floor_area = cfg.min_blob_area;
  if (cfg.row_dependent_min_area && cam != nullptr && row > horizon_row(*cam)) {
    const double d = distance_for_ground_row(*cam, row);
    const double side = pixel_extent_at_distance(*cam, cfg.min_object_size_m, d);
    floor_area = std::max<std::int64_t>(floor_area, static_cast<std::int64_t>(std::floor(side * side)));
  }
  return floor_area;
}

/// Groups outlier pixels into 8-connected blobs after a square dilation of
/// `blob_dilation` pixels, drops blobs smaller than the area floor and sorts
/// the rest nearest first.
inline std::vector<OutlierBlob> extract_blobs(const Mask& outliers, const FusionConfig& cfg,
                                              const CameraModel* cam = nullptr) {
  cfg.validate();
  const RunMask raw = RunMask::from_mask(outliers);
  if (raw.empty()) return {};
  const RunMask grown = dilate_square(raw, cfg.blob_dilation);
  int count = 0;
  const auto labels = label_components(grown, count);

  std::vector<OutlierBlob> blobs(static_cast<std::size_t>(count));
  for (int r = 0; r < raw.height(); ++r) {
    const auto src = raw.row(r);
    const auto dst = grown.row(r);
    const std::size_t off = grown.row_offset(r);
    std::size_t j = 0;
    for (const Run& run : src) {
      while (dst[j].end < run.end) ++j;  // every raw run sits inside one grown run
      OutlierBlob& blob = blobs[static_cast<std::size_t>(labels[off + j])];
      if (blob.area == 0) {
        blob.bbox = {r, r, run.begin, run.end - 1};
      }
      blob.runs.push_back({r, run.begin, run.end});
      blob.area += run.length();
      blob.bbox.min_row = std::min(blob.bbox.min_row, r);
      blob.bbox.max_row = std::max(blob.bbox.max_row, r);
      blob.bbox.min_col = std::min(blob.bbox.min_col, run.begin);
      blob.bbox.max_col = std::max(blob.bbox.max_col, run.end - 1);
      blob.nearest_row = blob.bbox.max_row;
    }
  }
  std::vector<OutlierBlob> kept;
  for (auto& blob : blobs) {
    if (blob.area > 0 && blob.area >= row_min_area(cfg, cam, blob.nearest_row)) kept.push_back(std::move(blob));
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const OutlierBlob& a, const OutlierBlob& b) { return a.nearest_row > b.nearest_row; });
  return kept;
}

inline bool blob_intersects(const OutlierBlob& blob, const CorridorMask& corridor) {
  for (const PixelRun& run : blob.runs) {
    if (run.row < 0 || run.row >= corridor.height()) continue;
    const auto px = corridor.row(run.row);
    for (int c = std::max(0, run.begin); c < std::min(run.end, corridor.width()); ++c) {
      if (px[static_cast<std::size_t>(c)]) return true;
    }
  }
  return false;
}

struct FusionReport {
  std::optional<std::size_t> acted_blob;  // index into the blob list
  std::optional<int> blob_nearest_row;
  std::optional<double> edge_distance;
};

struct FusionResult {
  CorridorMask corridor;
  FusionReport report;
};

/// Ends the corridor just below the nearest outlier blob that overlaps it.
/// A corridor that already stops short of every blob is returned unchanged.
inline FusionResult fuse(const CorridorMask& corridor, std::span<const OutlierBlob> blobs, const CameraModel& cam) {
  FusionResult result{corridor, {}};
  std::optional<std::size_t> chosen;
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    if (chosen && blobs[i].nearest_row <= blobs[*chosen].nearest_row) continue;
    if (blob_intersects(blobs[i], corridor)) chosen = i;
  }
  if (!chosen) return result;
  const int cut = blobs[*chosen].nearest_row;
  for (int r = 0; r <= std::min(cut, corridor.height() - 1); ++r) {
    auto px = result.corridor.row(r);
    std::fill(px.begin(), px.end(), std::uint8_t{0});
  }
  result.report.acted_blob = chosen;
  result.report.blob_nearest_row = cut;
  const int top = top_row(result.corridor);
  if (top >= 0 && top > horizon_row(cam)) {
    try {
      result.report.edge_distance = distance_for_ground_row(cam, top);
    } catch (const Error&) {
    }
  }
  return result;
}

}  // namespace corridor
