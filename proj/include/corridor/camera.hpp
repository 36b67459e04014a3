#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "corridor/errors.hpp"

namespace corridor {

/// Flat-ground pinhole camera. Rows and columns are pixel-centre coordinates,
/// so row r refers to the centre of pixel row r.
///
/// `pitch` follows the ground-row convention
///     row = cy + f * tan(atan(h / d) + pitch),
/// i.e. a positive pitch moves every ground point (and the horizon) toward the
/// bottom of the image.
struct CameraModel {
  double focal_length = 2000.0;
  double cx = 960.0;
  double cy = 540.0;
  int width = 1920;
  int height = 1080;
  double mount_height = 1.3;
  double pitch = 0.0;

  void validate() const {
    if (!(focal_length > 0.0)) fail(Errc::invalid_argument, "camera focal_length must be > 0");
    if (!(mount_height > 0.0)) fail(Errc::invalid_argument, "camera mount_height must be > 0");
    if (width <= 0 || height <= 0) fail(Errc::invalid_argument, "camera image size must be positive");
    if (!(cx >= 0.0 && cx < width)) fail(Errc::invalid_argument, "principal point column outside image");
    if (!(cy >= 0.0 && cy < height)) fail(Errc::invalid_argument, "principal point row outside image");
    if (!(std::abs(pitch) < std::numbers::pi / 4)) fail(Errc::invalid_argument, "camera pitch out of range");
  }

  bool operator==(const CameraModel&) const = default;
};

/// 1920x1080 tele camera, f = 2000 px, mounted 1.3 m above a level road.
inline CameraModel default_camera() { return CameraModel{}; }

inline double horizon_row(const CameraModel& cam) { return cam.cy + cam.focal_length * std::tan(cam.pitch); }

/// Ground row for distance `d` without the in-image check.
inline double project_ground_row(const CameraModel& cam, double d) {
  if (!(d > 0.0)) fail(Errc::distance_behind_camera, "distance must be > 0, got " + std::to_string(d));
  const double angle = std::atan(cam.mount_height / d) + cam.pitch;
  if (!(angle < std::numbers::pi / 2)) fail(Errc::row_out_of_image, "ground point below the camera frustum");
  return cam.cy + cam.focal_length * std::tan(angle);
}

/// Fractional image row where the ground at longitudinal distance `d` projects.
inline double ground_row_for_distance(const CameraModel& cam, double d) {
  const double row = project_ground_row(cam, d);
  if (!(row >= 0.0 && row < cam.height)) {
    fail(Errc::row_out_of_image, "distance " + std::to_string(d) + " m projects to row " + std::to_string(row));
  }
  return row;
}

inline double distance_for_ground_row(const CameraModel& cam, double row) {
  const double angle = std::atan((row - cam.cy) / cam.focal_length) - cam.pitch;
  if (!(angle > 0.0)) fail(Errc::above_horizon, "row " + std::to_string(row) + " is at or above the horizon");
  return cam.mount_height / std::tan(angle);
}

inline double pixel_extent_at_distance(const CameraModel& cam, double size_m, double d) {
  if (!(d > 0.0)) fail(Errc::distance_behind_camera, "distance must be > 0");
  if (size_m < 0.0) fail(Errc::invalid_argument, "size must be >= 0");
  return cam.focal_length * size_m / d;
}

/// Depth along the optical axis of the ground point at distance `d`.
inline double ground_depth(const CameraModel& cam, double d) {
  return d * std::cos(cam.pitch) - cam.mount_height * std::sin(cam.pitch);
}

/// Image column of the ground point at distance `d` and lateral offset `x`
/// (metres, positive to the right of the camera axis).
inline double ground_column(const CameraModel& cam, double d, double x) {
  return cam.cx + cam.focal_length * x / ground_depth(cam, d);
}

/// Half-up rounding used wherever fractional geometry is rasterised.
inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

/// First pixel row (largest index toward the top) whose ground distance
/// does not exceed `d`.
inline int first_row_within(const CameraModel& cam, double d) {
  const double row = project_ground_row(cam, d);
  return static_cast<int>(std::ceil(row - 1e-9));
}

/// Inclusive pixel-column span of a lane of width `lane_width` centred on the
/// camera axis at image row `row`; returns false when the row carries no lane
/// pixels (above the horizon or fully outside the image).
inline bool lane_columns(const CameraModel& cam, int row, double lane_width, int& first, int& last) {
  if (row <= horizon_row(cam)) return false;
  double d;
  try {
    d = distance_for_ground_row(cam, row);
  } catch (const Error&) {
    return false;
  }
  const double left = ground_column(cam, d, -lane_width / 2);
  const double right = ground_column(cam, d, lane_width / 2);
  first = std::max(0, static_cast<int>(std::ceil(left)));
  last = std::min(cam.width - 1, static_cast<int>(std::floor(right)));
  return first <= last;
}

}  // namespace corridor
