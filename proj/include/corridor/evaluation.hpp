#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corridor/camera.hpp"
#include "corridor/raster.hpp"
#include "corridor/scene.hpp"

namespace corridor {

enum class FailureMode { none, over_segmentation, under_segmentation, no_edge };

constexpr std::string_view failure_mode_name(FailureMode m) noexcept {
  switch (m) {
    case FailureMode::none: return "none";
    case FailureMode::over_segmentation: return "over_segmentation";
    case FailureMode::under_segmentation: return "under_segmentation";
    case FailureMode::no_edge: return "no_edge";
  }
  return "none";
}

inline FailureMode parse_failure_mode(std::string_view s) {
  for (auto m : {FailureMode::none, FailureMode::over_segmentation, FailureMode::under_segmentation,
                 FailureMode::no_edge}) {
    if (failure_mode_name(m) == s) return m;
  }
  fail(Errc::format_mismatch, "unknown failure mode '" + std::string(s) + "'");
}

struct DetectionVerdict {
  std::string scene_id;
  double distance_bin = 0.0;
  bool correct = false;
  std::optional<double> estimated_edge_distance;
  double error = 0.0;  // estimated - true distance [m]; 0 without an edge
  FailureMode failure_mode = FailureMode::no_edge;

  bool operator==(const DetectionVerdict&) const = default;
};

/// Judges the predicted corridor's longitudinal edge against the scene's
/// obstacle. Any predicted pixel inside the ground-truth lane beyond
/// distance * (1 + tol) is over-segmentation (the corridor wrapped around or
/// ran through the object); an edge closer than distance * (1 - tol) is
/// under-segmentation. Rows at or above the horizon count as infinitely far.
inline DetectionVerdict judge_detection(const CorridorMask& pred, const SceneRecord& scene, const CameraModel& cam,
                                        double tol, std::string scene_id = {}) {
  if (!scene.meta.has_obstacle) fail(Errc::no_obstacle_in_scene, "scene has no obstacle; use false_positive_eval");
  if (pred.width() != cam.width || pred.height() != cam.height) {
    fail(Errc::incompatible_dimensions, "prediction does not match the camera image size");
  }
  if (!(tol >= 0.0 && tol < 1.0)) fail(Errc::invalid_argument, "tolerance must be in [0, 1)");
  const double d = scene.meta.obstacle_distance;
  DetectionVerdict v;
  v.scene_id = std::move(scene_id);
  v.distance_bin = d;

  const double horizon = horizon_row(cam);
  const double far_limit = d * (1.0 + tol);
  bool beyond = false;
  int edge_row = -1;
  for (int r = 0; r < pred.height(); ++r) {
    const auto px = pred.row(r);
    if (r <= horizon) {
      if (std::any_of(px.begin(), px.end(), [](std::uint8_t p) { return p != 0; })) beyond = true;
      continue;
    }
    int first = 0, last = -1;
    if (!lane_columns(cam, r, scene.meta.lane_width, first, last)) continue;
    bool hit = false;
    for (int c = first; c <= last; ++c) {
      if (px[static_cast<std::size_t>(c)]) {
        hit = true;
        break;
      }
    }
    if (!hit) continue;
    if (edge_row < 0) edge_row = r;
    if (distance_for_ground_row(cam, r) > far_limit) beyond = true;
  }

  if (edge_row >= 0) {
    v.estimated_edge_distance = distance_for_ground_row(cam, edge_row);
    v.error = *v.estimated_edge_distance - d;
  }
  if (beyond) {
    v.failure_mode = FailureMode::over_segmentation;
  } else if (edge_row < 0) {
    v.failure_mode = FailureMode::no_edge;
  } else if (*v.estimated_edge_distance < d * (1.0 - tol)) {
    v.failure_mode = FailureMode::under_segmentation;
  } else {
    v.failure_mode = FailureMode::none;
  }
  v.correct = v.failure_mode == FailureMode::none;
  return v;
}

/// Percentage in tenths, truncated: floor(1000 * correct / total).
inline std::int64_t truncated_percent_tenths(std::int64_t correct, std::int64_t total) {
  if (total <= 0) fail(Errc::empty_bin, "rate over an empty bin");
  return (1000 * correct) / total;
}

inline std::string format_percent_tenths(std::int64_t tenths) {
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

/// "80 (95.2 %)".
inline std::string format_rate(std::int64_t correct, std::int64_t total) {
  return std::to_string(correct) + " (" + format_percent_tenths(truncated_percent_tenths(correct, total)) + " %)";
}

struct RateCell {
  std::string method;
  double bin_m = 0.0;
  std::int64_t correct = 0;
  std::int64_t total = 0;

  std::int64_t pct_tenths() const { return truncated_percent_tenths(correct, total); }
  std::string text() const { return format_rate(correct, total); }
  bool operator==(const RateCell&) const = default;
};

struct FpRun {
  int run_id = 0;
  int frames = 0;
  int fp_count = 0;

  bool operator==(const FpRun&) const = default;
};

struct EvalReport {
  std::vector<RateCell> cells;
  std::vector<FpRun> fp_runs;
};

/// One cell per requested bin, in the order given. A bin without verdicts
/// raises EmptyBin.
inline std::vector<RateCell> detection_rate(const std::string& method, std::span<const DetectionVerdict> verdicts,
                                            std::span<const double> bins) {
  std::vector<RateCell> cells;
  for (double bin : bins) {
    RateCell cell{method, bin, 0, 0};
    for (const DetectionVerdict& v : verdicts) {
      if (v.distance_bin == bin) {
        ++cell.total;
        cell.correct += v.correct ? 1 : 0;
      }
    }
    if (cell.total == 0) fail(Errc::empty_bin, "no verdicts for bin " + std::to_string(bin));
    cells.push_back(cell);
  }
  return cells;
}

/// Bins taken from the verdicts themselves, ascending.
inline std::vector<RateCell> detection_rate(const std::string& method, std::span<const DetectionVerdict> verdicts) {
  std::vector<double> bins;
  for (const auto& v : verdicts) bins.push_back(v.distance_bin);
  std::sort(bins.begin(), bins.end());
  bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
  return detection_rate(method, verdicts, bins);
}

/// Distance of the corridor's far end, +inf when it reaches the horizon and
/// nullopt for an empty mask.
inline std::optional<double> corridor_end_distance(const CorridorMask& mask, const CameraModel& cam) {
  const int top = top_row(mask);
  if (top < 0) return std::nullopt;
  if (top <= horizon_row(cam)) return std::numeric_limits<double>::infinity();
  return distance_for_ground_row(cam, top);
}

/// A frame is a false positive when its corridor ends short of
/// `expected_min_range` (an empty corridor ends at zero).
inline bool is_false_cut(const CorridorMask& mask, double expected_min_range, const CameraModel& cam) {
  const auto end = corridor_end_distance(mask, cam);
  return !end || *end < expected_min_range;
}

inline int false_positive_eval(std::span<const CorridorMask> frames, double expected_min_range, const CameraModel& cam) {
  int fp = 0;
  for (const CorridorMask& m : frames) fp += is_false_cut(m, expected_min_range, cam) ? 1 : 0;
  return fp;
}

struct ReportArtifacts {
  std::string rates_csv;
  std::string fp_csv;
  std::string markdown;
};

inline std::string format_bin(double bin) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", bin);
  return buf;
}

/// CSV (one row per method x bin, plus the false-positive runs) and a
/// Markdown table with one row per method and one column per bin.
inline ReportArtifacts render_report(const EvalReport& report) {
  ReportArtifacts out;
  out.rates_csv = "method,bin_m,correct,total,pct_truncated\n";
  for (const RateCell& c : report.cells) {
    out.rates_csv += c.method + "," + format_bin(c.bin_m) + "," + std::to_string(c.correct) + "," +
                     std::to_string(c.total) + "," + format_percent_tenths(c.pct_tenths()) + "\n";
  }
  out.fp_csv = "run_id,frames,fp_count\n";
  for (const FpRun& r : report.fp_runs) {
    out.fp_csv += std::to_string(r.run_id) + "," + std::to_string(r.frames) + "," + std::to_string(r.fp_count) + "\n";
  }

  std::vector<std::string> methods;
  std::vector<double> bins;
  for (const RateCell& c : report.cells) {
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
    if (std::find(bins.begin(), bins.end(), c.bin_m) == bins.end()) bins.push_back(c.bin_m);
  }
  std::sort(bins.begin(), bins.end());
  std::string& md = out.markdown;
  md = "| Method |";
  for (double b : bins) md += " " + format_bin(b) + " m |";
  md += "\n|---|";
  for (std::size_t i = 0; i < bins.size(); ++i) md += "---:|";
  md += "\n";
  for (const std::string& m : methods) {
    md += "| " + m + " |";
    for (double b : bins) {
      auto it = std::find_if(report.cells.begin(), report.cells.end(),
                             [&](const RateCell& c) { return c.method == m && c.bin_m == b; });
      md += " " + (it == report.cells.end() ? std::string("-") : it->text()) + " |";
    }
    md += "\n";
  }
  if (!report.fp_runs.empty()) {
    int frames = 0, fps = 0;
    for (const FpRun& r : report.fp_runs) {
      frames += r.frames;
      fps += r.fp_count;
    }
    md += "\nFalse cuts on obstacle-free runs: " + std::to_string(fps) + " of " + std::to_string(frames) +
          " frames over " + std::to_string(report.fp_runs.size()) + " runs.\n";
  }
  return out;
}

namespace detail {

inline std::vector<std::vector<std::string>> split_csv(std::string_view text, std::string_view header,
                                                      const std::string& name) {
  std::vector<std::vector<std::string>> rows;
  bool first = true;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (first) {
      if (line != header) fail(Errc::format_mismatch, name + ": expected header '" + std::string(header) + "'");
      first = false;
      continue;
    }
    std::vector<std::string> cells;
    std::size_t pos = 0;
    for (;;) {
      const std::size_t comma = line.find(',', pos);
      cells.emplace_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  if (first) fail(Errc::format_mismatch, name + ": missing header");
  return rows;
}

inline std::int64_t csv_int(const std::string& s, const std::string& name) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) fail(Errc::format_mismatch, name + ": bad integer '" + s + "'");
  return v;
}

}  // namespace detail

/// Reads rows written by `render_report`. The percentage column is checked
/// against the counts.
inline std::vector<RateCell> parse_rates_csv(std::string_view text, const std::string& name = "rates.csv") {
  std::vector<RateCell> cells;
  for (const auto& row : detail::split_csv(text, "method,bin_m,correct,total,pct_truncated", name)) {
    if (row.size() != 5) fail(Errc::format_mismatch, name + ": expected 5 columns");
    RateCell c;
    c.method = row[0];
    double bin = 0.0;
    auto [p, ec] = std::from_chars(row[1].data(), row[1].data() + row[1].size(), bin);
    if (ec != std::errc{} || p != row[1].data() + row[1].size()) {
      fail(Errc::format_mismatch, name + ": bad bin '" + row[1] + "'");
    }
    c.bin_m = bin;
    c.correct = detail::csv_int(row[2], name);
    c.total = detail::csv_int(row[3], name);
    if (c.correct < 0 || c.correct > c.total) fail(Errc::format_mismatch, name + ": correct outside [0, total]");
    if (format_percent_tenths(c.pct_tenths()) != row[4]) {
      fail(Errc::format_mismatch, name + ": percentage '" + row[4] + "' disagrees with the counts");
    }
    cells.push_back(std::move(c));
  }
  return cells;
}

inline std::vector<FpRun> parse_fp_csv(std::string_view text, const std::string& name = "fp.csv") {
  std::vector<FpRun> runs;
  for (const auto& row : detail::split_csv(text, "run_id,frames,fp_count", name)) {
    if (row.size() != 3) fail(Errc::format_mismatch, name + ": expected 3 columns");
    runs.push_back({static_cast<int>(detail::csv_int(row[0], name)), static_cast<int>(detail::csv_int(row[1], name)),
                    static_cast<int>(detail::csv_int(row[2], name))});
  }
  return runs;
}

}  // namespace corridor
