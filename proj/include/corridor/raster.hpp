#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "corridor/errors.hpp"

namespace corridor {

/// Dense row-major image of width x height elements.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) fail(Errc::invalid_argument, "negative raster dimensions");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }

  bool contains(int row, int col) const noexcept {
    return row >= 0 && row < height_ && col >= 0 && col < width_;
  }

  std::span<T> row(int r) noexcept { return {data_.data() + index(r, 0), static_cast<std::size_t>(width_)}; }
  std::span<const T> row(int r) const noexcept {
    return {data_.data() + index(r, 0), static_cast<std::size_t>(width_)};
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb8&) const = default;
};

/// Binary raster with values in {0, 1}.
using Mask = Raster<std::uint8_t>;
/// Binary raster of the drivable ego-lane.
using CorridorMask = Mask;
using RgbImage = Raster<Rgb8>;
using FloatRaster = Raster<float>;

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    fail(Errc::incompatible_dimensions,
         std::string(what) + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
             std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

inline std::int64_t count_set(const Mask& m) {
  std::int64_t n = 0;
  for (auto v : m.pixels()) n += v != 0;
  return n;
}

/// True when every set pixel of `inner` is also set in `outer`.
inline bool is_subset(const Mask& inner, const Mask& outer) {
  require_same_shape(inner, outer, "is_subset");
  auto a = inner.pixels();
  auto b = outer.pixels();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && !b[i]) return false;
  }
  return true;
}

/// Smallest row index holding a set pixel, or -1 for an empty mask.
inline int top_row(const Mask& m) {
  for (int r = 0; r < m.height(); ++r) {
    for (auto v : m.row(r)) {
      if (v) return r;
    }
  }
  return -1;
}

}  // namespace corridor
