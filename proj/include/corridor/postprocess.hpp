#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "corridor/camera.hpp"
#include "corridor/raster.hpp"
#include "corridor/runs.hpp"

namespace corridor {

/// Per-row corridor pixel counts, index 0 being the bottom image row.
struct WidthProfile {
  struct Range {
    int first = 0;
    int last = 0;
  };

  std::vector<int> width_px;
  std::optional<Range> valid_range;

  int image_row(int index) const noexcept { return static_cast<int>(width_px.size()) - 1 - index; }
};

struct DropParams {
  int smooth_window = 25;
  double drop_ratio = 0.5;
  int persistence = 5;

  void validate() const {
    if (!(drop_ratio > 0.0 && drop_ratio < 1.0)) fail(Errc::invalid_argument, "drop_ratio must be in (0, 1)");
    if (smooth_window < 1) fail(Errc::invalid_argument, "smooth_window must be >= 1");
    if (persistence < 1) fail(Errc::invalid_argument, "persistence must be >= 1");
  }
};

enum class DropStatus { ok, degenerate_profile };

struct DropResult {
  std::optional<int> index;  // profile index (rows from the bottom) of the first narrowed row
  DropStatus status = DropStatus::ok;
};

struct PostprocessParams {
  int closing_radius = 2;
  DropParams drop;
  int max_passes = 8;
};

struct EdgeResult {
  std::optional<double> cut_row;        // first kept row after a width-drop cut
  std::optional<double> edge_row;       // top row of the final corridor
  std::optional<double> edge_distance;  // metres, when the top row lies below the horizon
  std::vector<int> band_top_rows;       // columns [W/3, 2W/3); -1 where the column is empty
  DropStatus drop_status = DropStatus::ok;
};

struct PostprocessResult {
  CorridorMask corridor;
  EdgeResult edge;
};

namespace detail {

inline double median_of(std::vector<int>& v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Anchor region: bottom 5% of rows, central third of columns.
inline bool touches_anchor(int row, const Run& run, int width, int height) {
  const int anchor_rows = std::max(1, (height * 5 + 99) / 100);
  if (row < height - anchor_rows) return false;
  const int c0 = width / 3;
  const int c1 = (2 * width + 2) / 3;
  return run.begin < c1 && run.end > c0;
}

/// Keeps the 8-connected component meeting the anchor region. When several
/// do, the largest wins (lowest label on ties).
inline RunMask select_anchor_component(const RunMask& mask) {
  int count = 0;
  const auto labels = label_components(mask, count);
  if (count == 0) return mask;
  std::vector<std::int64_t> area(static_cast<std::size_t>(count), 0);
  std::vector<bool> anchored(static_cast<std::size_t>(count), false);
  for (int r = 0; r < mask.height(); ++r) {
    const std::size_t off = mask.row_offset(r);
    const auto row = mask.row(r);
    for (std::size_t k = 0; k < row.size(); ++k) {
      const auto lbl = static_cast<std::size_t>(labels[off + k]);
      area[lbl] += row[k].length();
      if (touches_anchor(r, row[k], mask.width(), mask.height())) anchored[lbl] = true;
    }
  }
  int best = -1;
  for (int l = 0; l < count; ++l) {
    if (anchored[static_cast<std::size_t>(l)] &&
        (best < 0 || area[static_cast<std::size_t>(l)] > area[static_cast<std::size_t>(best)])) {
      best = l;
    }
  }
  return filter_runs(mask, [&](std::size_t idx, int, const Run&) { return labels[idx] == best; });
}

inline CorridorMask select_anchor_component(const CorridorMask& mask) {
  return select_anchor_component(RunMask::from_mask(mask)).to_mask();
}

/// Morphological closing with a disk of the given radius.
inline CorridorMask close_small_openings(const CorridorMask& mask, int radius) {
  if (radius < 0) fail(Errc::invalid_argument, "closing radius must be >= 0");
  if (radius == 0) return mask;
  return close_disk(RunMask::from_mask(mask), radius).to_mask();
}

inline WidthProfile width_profile(const RunMask& mask) {
  WidthProfile p;
  const int h = mask.height();
  p.width_px.resize(static_cast<std::size_t>(h), 0);
  for (int i = 0; i < h; ++i) {
    const int w = static_cast<int>(mask.row_area(h - 1 - i));
    p.width_px[static_cast<std::size_t>(i)] = w;
    if (w > 0) {
      if (!p.valid_range) p.valid_range = WidthProfile::Range{i, i};
      p.valid_range->last = i;
    }
  }
  return p;
}

inline WidthProfile width_profile(const CorridorMask& mask) { return width_profile(RunMask::from_mask(mask)); }

/// Expected width at profile index `at`, extrapolated from the `window`
/// rows just before it: the medians of the two halves of the window give a
/// robust level and slope, so a perspective taper is tracked instead of
/// being mistaken for a drop.
inline double trailing_reference(const std::vector<int>& w, int at, int window) {
  const int start = at - window;
  std::vector<int> buf;
  if (window < 4) {
    buf.assign(w.begin() + start, w.begin() + at);
    return detail::median_of(buf);
  }
  const int half = window / 2;
  buf.assign(w.begin() + start, w.begin() + start + half);
  const double m_far = detail::median_of(buf);
  buf.assign(w.begin() + start + half, w.begin() + at);
  const double m_near = detail::median_of(buf);
  const double c_far = start + (half - 1) / 2.0;
  const double c_near = start + half + (window - half - 1) / 2.0;
  const double slope = (m_near - m_far) / (c_near - c_far);
  return m_near + slope * (at - c_near);
}

/// First profile index, scanning away from the vehicle, where the width
/// falls below `drop_ratio` times the trailing reference and stays there for
/// `persistence` rows. Rows past the corridor's end count as zero width, but
/// the drop itself must start inside the valid range.
inline DropResult detect_width_drop(const WidthProfile& profile, const DropParams& params) {
  params.validate();
  DropResult result;
  if (!profile.valid_range) return result;
  const auto [first, last] = *profile.valid_range;
  if (last - first + 1 < params.smooth_window) {
    result.status = DropStatus::degenerate_profile;
    return result;
  }
  const auto& w = profile.width_px;
  const int n = static_cast<int>(w.size());
  for (int i = first + params.smooth_window; i <= last; ++i) {
    const double ref = trailing_reference(w, i, params.smooth_window);
    if (!(ref > 0.0)) continue;
    const double limit = params.drop_ratio * ref;
    bool persistent = true;
    for (int j = i; j < i + params.persistence; ++j) {
      const int wj = j < n ? w[static_cast<std::size_t>(j)] : 0;
      if (!(wj < limit)) {
        persistent = false;
        break;
      }
    }
    if (persistent) {
      result.index = i;
      return result;
    }
  }
  return result;
}

/// Clears every row farther than `cut_row` (smaller row index); rows at and
/// nearer than it are untouched.
inline CorridorMask truncate_at_row(const CorridorMask& mask, int cut_row) {
  if (cut_row < 0 || cut_row > mask.height()) fail(Errc::invalid_argument, "cut row outside image");
  CorridorMask out = mask;
  for (int r = 0; r < cut_row; ++r) {
    auto px = out.row(r);
    std::fill(px.begin(), px.end(), std::uint8_t{0});
  }
  return out;
}

namespace detail {

inline RunMask postprocess_pass(const RunMask& in, const PostprocessParams& params, EdgeResult& edge) {
  RunMask m = select_anchor_component(in);
  m = select_anchor_component(close_disk(m, params.closing_radius));
  m = select_anchor_component(longest_run_per_row(m));
  m = select_anchor_component(close_disk(m, params.closing_radius));
  const WidthProfile profile = width_profile(m);
  const DropResult drop = detect_width_drop(profile, params.drop);
  edge.drop_status = drop.status;
  if (drop.index) {
    const int kept = profile.image_row(*drop.index) + 1;
    m = clear_rows_above(m, kept);
    edge.cut_row = kept;
  }
  return m;
}

}  // namespace detail

/// Component selection, hole closing, per-row contiguity and the width-drop
/// cut, repeated until the corridor stops changing (normally two passes).
inline PostprocessResult postprocess(const CorridorMask& mask, const PostprocessParams& params,
                                     const CameraModel& cam) {
  if (params.closing_radius < 0) fail(Errc::invalid_argument, "closing radius must be >= 0");
  params.drop.validate();
  EdgeResult edge;
  RunMask current = RunMask::from_mask(mask);
  for (int pass = 0; pass < std::max(1, params.max_passes); ++pass) {
    EdgeResult pass_edge;
    RunMask next = detail::postprocess_pass(current, params, pass_edge);
    if (pass_edge.cut_row) edge.cut_row = pass_edge.cut_row;
    if (pass == 0) edge.drop_status = pass_edge.drop_status;
    const bool stable = next == current;
    current = std::move(next);
    if (stable) break;
  }

  const int top = top_row(current);
  if (top >= 0) {
    edge.edge_row = top;
    if (top > horizon_row(cam)) {
      try {
        edge.edge_distance = distance_for_ground_row(cam, top);
      } catch (const Error&) {
      }
    }
  }
  CorridorMask out = current.to_mask();
  const int c0 = out.width() / 3;
  const int c1 = (2 * out.width()) / 3;
  edge.band_top_rows.assign(static_cast<std::size_t>(std::max(0, c1 - c0)), -1);
  for (int r = out.height() - 1; r >= 0; --r) {
    for (const Run& run : current.row(r)) {
      for (int c = std::max(run.begin, c0); c < std::min(run.end, c1); ++c) {
        edge.band_top_rows[static_cast<std::size_t>(c - c0)] = r;
      }
    }
  }
  return {std::move(out), std::move(edge)};
}

}  // namespace corridor
