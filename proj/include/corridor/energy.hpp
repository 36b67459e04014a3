#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "corridor/raster.hpp"

namespace corridor {

/// Per-pixel scores over K classes, stored class-planar: plane c holds the
/// score of class c for every pixel in row-major order.
class LogitVolume {
 public:
  LogitVolume() = default;
  LogitVolume(int width, int height, int classes, float fill = 0.0f)
      : width_(width), height_(height), classes_(classes) {
    if (width < 0 || height < 0) fail(Errc::invalid_argument, "negative logit volume dimensions");
    if (classes < 2) fail(Errc::invalid_argument, "logit volume needs at least 2 classes");
    data_.assign(plane_size() * static_cast<std::size_t>(classes), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int classes() const noexcept { return classes_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }

  std::span<float> plane(int c) noexcept { return {data_.data() + plane_size() * static_cast<std::size_t>(c), plane_size()}; }
  std::span<const float> plane(int c) const noexcept {
    return {data_.data() + plane_size() * static_cast<std::size_t>(c), plane_size()};
  }

  float& operator()(int c, int row, int col) noexcept { return data_[offset(c, row, col)]; }
  float operator()(int c, int row, int col) const noexcept { return data_[offset(c, row, col)]; }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  /// Scores of every class at one pixel.
  std::vector<float> pixel(int row, int col) const {
    std::vector<float> z(static_cast<std::size_t>(classes_));
    for (int c = 0; c < classes_; ++c) z[static_cast<std::size_t>(c)] = (*this)(c, row, col);
    return z;
  }

  bool operator==(const LogitVolume&) const = default;

 private:
  std::size_t offset(int c, int row, int col) const noexcept {
    return plane_size() * static_cast<std::size_t>(c) + static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  int classes_ = 0;
  std::vector<float> data_;
};

/// Free energy per pixel; larger means more outlier-like.
using EnergyMap = FloatRaster;

/// Free energy -log(sum_c exp(z_c)) of one pixel, evaluated in double with
/// max subtraction.
inline double free_energy(std::span<const float> logits) {
  if (logits.size() < 2) fail(Errc::invalid_argument, "free energy needs at least 2 classes");
  double m = -std::numeric_limits<double>::infinity();
  for (float z : logits) {
    if (!std::isfinite(z)) fail(Errc::non_finite_logits, "non-finite logit");
    m = std::max(m, static_cast<double>(z));
  }
  double s = 0.0;
  for (float z : logits) s += std::exp(static_cast<double>(z) - m);
  return -(m + std::log(s));
}

namespace detail {

// Branch-free float exp for -87 <= x <= 0 (Cephes expf polynomial, ~1 ulp).
// Callers clamp in a separate loop: a clamp inside this body gets
// tail-duplicated by GCC and the pixel loop no longer vectorises.
inline float exp_nonpositive(float x) noexcept {
  constexpr float log2e = 1.44269504088896341f;
  constexpr float magic = 12582912.0f;  // 1.5 * 2^23, rounds to nearest integer
  const float t = x * log2e + magic;
  const float n = t - magic;
  const std::int32_t ni = std::bit_cast<std::int32_t>(t) - std::bit_cast<std::int32_t>(magic);
  float r = x - n * 0.693359375f;
  r = r - n * -2.12194440e-4f;
  float p = 1.9875691500e-4f;
  p = p * r + 1.3981999507e-3f;
  p = p * r + 8.3334519073e-3f;
  p = p * r + 4.1665795894e-2f;
  p = p * r + 1.6666665459e-1f;
  p = p * r + 5.0000001201e-1f;
  p = p * r * r + r + 1.0f;
  return p * std::bit_cast<float>((ni + 127) << 23);
}

// Natural log for x >= 1 (Cephes logf polynomial, ~1 ulp).
inline float log_ge1(float x) noexcept {
  const std::int32_t bits = std::bit_cast<std::int32_t>(x);
  std::int32_t e = ((bits >> 23) & 0xff) - 126;
  float m = std::bit_cast<float>((bits & 0x007fffff) | 0x3f000000);  // [0.5, 1)
  const std::int32_t small = m < 0.707106781186547524f;
  e -= small;
  m = m + m * static_cast<float>(small) - 1.0f;
  const float z = m * m;
  float y = 7.0376836292e-2f;
  y = y * m - 1.1514610310e-1f;
  y = y * m + 1.1676998740e-1f;
  y = y * m - 1.2420140846e-1f;
  y = y * m + 1.4249322787e-1f;
  y = y * m - 1.6668057665e-1f;
  y = y * m + 2.0000714765e-1f;
  y = y * m - 2.4999993993e-1f;
  y = y * m + 3.3333331174e-1f;
  y = y * m * z;
  const float fe = static_cast<float>(e);
  y += fe * -2.12194440e-4f;
  y += -0.5f * z;
  return m + y + fe * 0.693359375f;
}

inline bool is_non_finite_bits(float v) noexcept {
  return (std::bit_cast<std::uint32_t>(v) & 0x7f800000u) == 0x7f800000u;
}

}  // namespace detail

/// Free-energy raster of a logit volume. Same formula as `free_energy`, in
/// single precision.
inline EnergyMap energy_from_logits(const LogitVolume& logits) {
  EnergyMap energy(logits.width(), logits.height());
  const std::size_t n = logits.plane_size();
  const int k = logits.classes();
  constexpr std::size_t block = 2048;
  alignas(64) float mx[block];
  alignas(64) float sum[block];
  alignas(64) float diff[block];
  float* out = energy.data();
  std::uint32_t bad = 0;
  for (std::size_t b0 = 0; b0 < n; b0 += block) {
    const std::size_t len = std::min(block, n - b0);
    const float* z0 = logits.plane(0).data() + b0;
    for (std::size_t i = 0; i < len; ++i) {
      mx[i] = z0[i];
      bad |= static_cast<std::uint32_t>(detail::is_non_finite_bits(z0[i]));
    }
    for (int c = 1; c < k; ++c) {
      const float* z = logits.plane(c).data() + b0;
      for (std::size_t i = 0; i < len; ++i) {
        mx[i] = z[i] > mx[i] ? z[i] : mx[i];
        bad |= static_cast<std::uint32_t>(detail::is_non_finite_bits(z[i]));
      }
    }
    if (bad) fail(Errc::non_finite_logits, "logit volume contains NaN or Inf");
    for (std::size_t i = 0; i < len; ++i) sum[i] = 0.0f;
    for (int c = 0; c < k; ++c) {
      const float* z = logits.plane(c).data() + b0;
      for (std::size_t i = 0; i < len; ++i) {
        const float d = z[i] - mx[i];
        diff[i] = d > -87.0f ? d : -87.0f;
      }
      for (std::size_t i = 0; i < len; ++i) sum[i] += detail::exp_nonpositive(diff[i]);
    }
    for (std::size_t i = 0; i < len; ++i) out[b0 + i] = -(mx[i] + detail::log_ge1(sum[i]));
  }
  return energy;
}

/// Pixels whose energy exceeds `threshold`.
inline Mask threshold_outliers(const EnergyMap& energy, float threshold) {
  if (!std::isfinite(threshold)) fail(Errc::invalid_argument, "energy threshold must be finite");
  Mask out(energy.width(), energy.height(), 0);
  const auto e = energy.pixels();
  auto o = out.pixels();
  for (std::size_t i = 0; i < e.size(); ++i) o[i] = e[i] > threshold ? 1 : 0;
  return out;
}

}  // namespace corridor
