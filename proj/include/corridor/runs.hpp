#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "corridor/raster.hpp"

namespace corridor {

/// Half-open column interval [begin, end) of set pixels within one row.
struct Run {
  int begin = 0;
  int end = 0;

  int length() const noexcept { return end - begin; }
  bool operator==(const Run&) const = default;
};

/// Run-length form of a binary mask. Runs in a row are sorted, disjoint and
/// non-adjacent. Corridor masks are a handful of runs per row, so every
/// morphological and connectivity pass below is linear in the run count
/// rather than in the pixel count.
class RunMask {
 public:
  RunMask() = default;
  RunMask(int width, int height) : width_(width), height_(height), offsets_(static_cast<std::size_t>(height) + 1, 0) {}

  static RunMask from_mask(const Mask& m) {
    RunMask out(m.width(), m.height());
    out.offsets_.clear();
    out.offsets_.push_back(0);
    for (int r = 0; r < m.height(); ++r) {
      auto px = m.row(r);
      int c = 0;
      const int w = m.width();
      while (c < w) {
        while (c < w && !px[static_cast<std::size_t>(c)]) ++c;
        if (c == w) break;
        const int b = c;
        while (c < w && px[static_cast<std::size_t>(c)]) ++c;
        out.runs_.push_back({b, c});
      }
      out.offsets_.push_back(static_cast<std::uint32_t>(out.runs_.size()));
    }
    return out;
  }

  Mask to_mask() const {
    Mask m(width_, height_, 0);
    for (int r = 0; r < height_; ++r) {
      auto px = m.row(r);
      for (const Run& run : row(r)) {
        std::fill(px.begin() + run.begin, px.begin() + run.end, std::uint8_t{1});
      }
    }
    return m;
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::span<const Run> row(int r) const noexcept {
    return {runs_.data() + offsets_[static_cast<std::size_t>(r)],
            offsets_[static_cast<std::size_t>(r) + 1] - offsets_[static_cast<std::size_t>(r)]};
  }
  std::span<const Run> runs() const noexcept { return runs_; }
  std::size_t row_offset(int r) const noexcept { return offsets_[static_cast<std::size_t>(r)]; }

  std::int64_t area() const noexcept {
    std::int64_t a = 0;
    for (const Run& run : runs_) a += run.length();
    return a;
  }
  std::int64_t row_area(int r) const noexcept {
    std::int64_t a = 0;
    for (const Run& run : row(r)) a += run.length();
    return a;
  }
  bool empty() const noexcept { return runs_.empty(); }

  bool operator==(const RunMask&) const = default;

  /// Appends rows top to bottom; runs within a row may arrive unsorted and
  /// overlapping, `end_row` normalises them.
  class Builder;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Run> runs_;
  std::vector<std::uint32_t> offsets_;
};

class RunMask::Builder {
 public:
  Builder(int width, int height) : mask_(width, height) {
    mask_.offsets_.clear();
    mask_.offsets_.push_back(0);
    mask_.offsets_.reserve(static_cast<std::size_t>(height) + 1);
  }

  void add(Run run) {
    run.begin = std::max(run.begin, 0);
    run.end = std::min(run.end, mask_.width_);
    if (run.begin < run.end) pending_.push_back(run);
  }

  void end_row() {
    std::sort(pending_.begin(), pending_.end(), [](const Run& a, const Run& b) { return a.begin < b.begin; });
    std::size_t first = mask_.runs_.size();
    for (const Run& run : pending_) {
      if (mask_.runs_.size() > first && run.begin <= mask_.runs_.back().end) {
        mask_.runs_.back().end = std::max(mask_.runs_.back().end, run.end);
      } else {
        mask_.runs_.push_back(run);
      }
    }
    pending_.clear();
    mask_.offsets_.push_back(static_cast<std::uint32_t>(mask_.runs_.size()));
  }

  RunMask finish() && {
    while (mask_.offsets_.size() < static_cast<std::size_t>(mask_.height_) + 1) end_row();
    return std::move(mask_);
  }

 private:
  RunMask mask_;
  std::vector<Run> pending_;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// 8-connected component labelling. Returns one label per run (indexing
/// `mask.runs()`), labels numbered 0..count-1 in raster order of first run.
inline std::vector<int> label_components(const RunMask& mask, int& count) {
  const auto runs = mask.runs();
  detail::DisjointSets sets(runs.size());
  for (int r = 0; r + 1 < mask.height(); ++r) {
    const std::size_t a0 = mask.row_offset(r);
    const std::size_t a1 = mask.row_offset(r + 1);
    const std::size_t b1 = mask.row_offset(r + 2);
    std::size_t i = a0;
    std::size_t j = a1;
    while (i < a1 && j < b1) {
      const Run& a = runs[i];
      const Run& b = runs[j];
      // Diagonal contact counts: columns may differ by one.
      if (a.begin <= b.end && b.begin <= a.end) sets.unite(i, j);
      if (a.end < b.end) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  std::vector<int> labels(runs.size(), -1);
  std::vector<int> root_label(runs.size(), -1);
  count = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::size_t root = sets.find(i);
    if (root_label[root] < 0) root_label[root] = count++;
    labels[i] = root_label[root];
  }
  return labels;
}

template <typename Keep>
RunMask filter_runs(const RunMask& mask, Keep&& keep) {
  RunMask::Builder b(mask.width(), mask.height());
  for (int r = 0; r < mask.height(); ++r) {
    const std::size_t off = mask.row_offset(r);
    const auto row = mask.row(r);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (keep(off + k, r, row[k])) b.add(row[k]);
    }
    b.end_row();
  }
  return std::move(b).finish();
}

inline RunMask complement(const RunMask& mask) {
  RunMask::Builder b(mask.width(), mask.height());
  for (int r = 0; r < mask.height(); ++r) {
    int c = 0;
    for (const Run& run : mask.row(r)) {
      b.add({c, run.begin});
      c = run.end;
    }
    b.add({c, mask.width()});
    b.end_row();
  }
  return std::move(b).finish();
}

/// Dilation by a row-symmetric structuring element described by the
/// half-width of each of its 2k+1 rows. Pixels outside the image are treated
/// as background.
inline RunMask dilate_rows(const RunMask& mask, std::span<const int> half_widths) {
  const int k = static_cast<int>(half_widths.size() / 2);
  RunMask::Builder b(mask.width(), mask.height());
  for (int r = 0; r < mask.height(); ++r) {
    for (int dy = -k; dy <= k; ++dy) {
      const int src = r + dy;
      if (src < 0 || src >= mask.height()) continue;
      const int hw = half_widths[static_cast<std::size_t>(dy + k)];
      if (hw < 0) continue;
      for (const Run& run : mask.row(src)) b.add({run.begin - hw, run.end + hw});
    }
    b.end_row();
  }
  return std::move(b).finish();
}

inline std::vector<int> disk_half_widths(int radius) {
  std::vector<int> hw;
  for (int dy = -radius; dy <= radius; ++dy) {
    hw.push_back(static_cast<int>(std::floor(std::sqrt(static_cast<double>(radius * radius - dy * dy)) + 1e-9)));
  }
  return hw;
}

inline RunMask dilate_disk(const RunMask& mask, int radius) {
  if (radius <= 0) return mask;
  const auto hw = disk_half_widths(radius);
  return dilate_rows(mask, hw);
}

/// Erosion by a disk with everything outside the image treated as
/// foreground, dual to `dilate_disk`; this keeps closing extensive at the
/// image border.
inline RunMask erode_disk(const RunMask& mask, int radius) {
  if (radius <= 0) return mask;
  return complement(dilate_disk(complement(mask), radius));
}

inline RunMask close_disk(const RunMask& mask, int radius) {
  if (radius <= 0) return mask;
  return erode_disk(dilate_disk(mask, radius), radius);
}

inline RunMask dilate_square(const RunMask& mask, int radius) {
  if (radius <= 0) return mask;
  const std::vector<int> hw(static_cast<std::size_t>(2 * radius + 1), radius);
  return dilate_rows(mask, hw);
}

/// Keeps the longest run of every row; ties go to the leftmost run.
inline RunMask longest_run_per_row(const RunMask& mask) {
  RunMask::Builder b(mask.width(), mask.height());
  for (int r = 0; r < mask.height(); ++r) {
    const auto row = mask.row(r);
    if (!row.empty()) {
      const Run* best = &row[0];
      for (const Run& run : row) {
        if (run.length() > best->length()) best = &run;
      }
      b.add(*best);
    }
    b.end_row();
  }
  return std::move(b).finish();
}

/// Clears every row with index < `first_kept_row`.
inline RunMask clear_rows_above(const RunMask& mask, int first_kept_row) {
  return filter_runs(mask, [&](std::size_t, int r, const Run&) { return r >= first_kept_row; });
}

inline int top_row(const RunMask& mask) {
  for (int r = 0; r < mask.height(); ++r) {
    if (!mask.row(r).empty()) return r;
  }
  return -1;
}

}  // namespace corridor
