#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <span>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <csetjmp>
#include <png.h>
#include <zlib.h>

#include "corridor/camera.hpp"
#include "corridor/energy.hpp"
#include "corridor/raster.hpp"
#include "corridor/scene.hpp"

namespace corridor {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Whole-file helpers

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_failure, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_failure, "cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(Errc::io_failure, "write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------
// PNG

namespace detail {

struct PngPixels {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 = gray, 3 = RGB; 0 = any other layout
  int bit_depth = 0;
  std::vector<std::uint8_t> data;
};

struct PngErrorSink {
  std::jmp_buf jump;
  char message[200] = {};
};

extern "C" inline void png_error_to_sink(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof sink->message, "%s", msg);
  std::longjmp(sink->jump, 1);
}

extern "C" inline void png_warning_ignored(png_structp, png_const_charp) {}

// libpng reports errors by longjmp, so the two routines below keep no C++
// object with a destructor between setjmp and the libpng calls.
inline bool png_encode(std::FILE* f, const std::uint8_t* data, int width, int height, int channels,
                       PngErrorSink& sink) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink, png_error_to_sink, png_warning_ignored);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(sink.jump)) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  // Fixed filter and fast RLE deflate: images are flat-shaded, masks are
  // binary, and adaptive filtering would dominate the dataset write time.
  png_set_filter(png, 0, channels == 3 ? PNG_FILTER_SUB : PNG_FILTER_NONE);
  png_set_compression_level(png, 1);
  png_set_compression_strategy(png, Z_RLE);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  for (int r = 0; r < height; ++r) {
    png_write_row(png, data + static_cast<std::size_t>(r) * stride);
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return true;
}

inline bool png_decode(std::FILE* f, PngPixels& out, PngErrorSink& sink) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, png_error_to_sink, png_warning_ignored);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(sink.jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, f);
  png_read_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  const bool interlaced = png_get_interlace_type(png, info) != PNG_INTERLACE_NONE;
  out.channels = 0;
  if (out.bit_depth == 8 && !interlaced && !png_get_valid(png, info, PNG_INFO_tRNS)) {
    if (color == PNG_COLOR_TYPE_GRAY) out.channels = 1;
    if (color == PNG_COLOR_TYPE_RGB) out.channels = 3;
  }
  if (out.channels == 0) {
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
  }
  out.data.resize(static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height) *
                  static_cast<std::size_t>(out.channels));
  const std::size_t stride = static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.channels);
  for (int r = 0; r < out.height; ++r) png_read_row(png, out.data.data() + static_cast<std::size_t>(r) * stride, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline void write_png(const fs::path& path, const std::uint8_t* data, int width, int height, int channels) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(Errc::io_failure, "cannot open '" + path.string() + "' for writing");
  PngErrorSink sink;
  const bool ok = png_encode(f, data, width, height, channels, sink);
  const bool closed = std::fclose(f) == 0;
  if (!ok || !closed) fail(Errc::io_failure, "cannot write '" + path.string() + "': " + sink.message);
}

inline PngPixels read_png(const fs::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(Errc::io_failure, "cannot open '" + path.string() + "' for reading");
  PngPixels px;
  PngErrorSink sink;
  const bool ok = png_decode(f, px, sink);
  std::fclose(f);
  if (!ok) fail(Errc::format_mismatch, "cannot decode '" + path.string() + "': " + sink.message);
  return px;
}

}  // namespace detail

/// 8-bit grayscale PNG with values {0, 255}.
inline void write_mask_png(const fs::path& path, const Mask& mask) {
  std::vector<std::uint8_t> gray(mask.pixels().size());
  const auto px = mask.pixels();
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = px[i] ? 255 : 0;
  detail::write_png(path, gray.data(), mask.width(), mask.height(), 1);
}

inline Mask read_mask_png(const fs::path& path) {
  const detail::PngPixels png = detail::read_png(path);
  if (png.channels != 1) fail(Errc::format_mismatch, "'" + path.string() + "' is not an 8-bit grayscale PNG");
  Mask mask(png.width, png.height);
  auto px = mask.pixels();
  for (std::size_t i = 0; i < png.data.size(); ++i) {
    const std::uint8_t v = png.data[i];
    if (v != 0 && v != 255) {
      const auto w = static_cast<std::size_t>(png.width);
      fail(Errc::format_mismatch, "'" + path.string() + "' has mask value " + std::to_string(v) + " at row " +
                                      std::to_string(i / w) + ", col " + std::to_string(i % w) +
                                      "; only 0 and 255 are legal");
    }
    px[i] = v ? 1 : 0;
  }
  return mask;
}

inline void write_rgb_png(const fs::path& path, const RgbImage& image) {
  static_assert(sizeof(Rgb8) == 3, "Rgb8 must be tightly packed");
  detail::write_png(path, reinterpret_cast<const std::uint8_t*>(image.data()), image.width(), image.height(), 3);
}

inline RgbImage read_rgb_png(const fs::path& path) {
  const detail::PngPixels png = detail::read_png(path);
  if (png.channels != 3) fail(Errc::format_mismatch, "'" + path.string() + "' is not an 8-bit RGB PNG");
  RgbImage image(png.width, png.height);
  std::memcpy(static_cast<void*>(image.data()), png.data.data(), png.data.size());
  return image;
}

// ---------------------------------------------------------------------------
// Binary rasters
//
// Energy: "EGY1", u32 width, u32 height, u32 endian flag, then width*height
// row-major float32. Logits: "LGT1", u32 width, u32 height, u32 endian flag,
// u32 classes, then class-planar float32. Files are written in host byte
// order; the flag (0x01020304) reads back as 0x04030201 on a host of the
// other byte order and the payload is swapped on load.

inline constexpr std::uint32_t kEndianFlag = 0x01020304u;

namespace detail {

constexpr std::uint32_t bswap32(std::uint32_t v) noexcept {
  return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) | (v << 24);
}

inline void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

inline std::uint32_t get_u32(const char* p, bool swap) {
  std::uint32_t v = 0;
  std::memcpy(&v, p, 4);
  return swap ? bswap32(v) : v;
}

struct RasterHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t classes = 1;
  bool swap = false;
  std::size_t header_bytes = 0;
};

inline RasterHeader parse_header(std::string_view bytes, std::string_view magic, bool with_classes,
                                 const std::string& name) {
  const std::size_t header_bytes = with_classes ? 20 : 16;
  if (bytes.size() < 4) fail(Errc::truncated_file, name + ": file shorter than its magic");
  if (bytes.substr(0, 4) != magic) {
    fail(Errc::bad_magic, name + ": expected magic '" + std::string(magic) + "'");
  }
  if (bytes.size() < header_bytes) fail(Errc::truncated_file, name + ": header is incomplete");
  RasterHeader h;
  h.header_bytes = header_bytes;
  const std::uint32_t flag = get_u32(bytes.data() + 12, false);
  if (flag == kEndianFlag) {
    h.swap = false;
  } else if (flag == bswap32(kEndianFlag)) {
    h.swap = true;
  } else {
    fail(Errc::bad_magic, name + ": unrecognised endian flag");
  }
  h.width = get_u32(bytes.data() + 4, h.swap);
  h.height = get_u32(bytes.data() + 8, h.swap);
  if (with_classes) h.classes = get_u32(bytes.data() + 16, h.swap);
  if (h.width == 0 || h.height == 0 || h.classes == 0) fail(Errc::dimension_mismatch, name + ": zero dimension");
  const std::uint64_t values = std::uint64_t{h.width} * h.height * h.classes;
  const std::uint64_t need = header_bytes + values * 4;
  if (bytes.size() < need) fail(Errc::truncated_file, name + ": payload is shorter than the header declares");
  if (bytes.size() > need) fail(Errc::dimension_mismatch, name + ": trailing bytes after the declared payload");
  return h;
}

inline void copy_floats(std::string_view bytes, std::size_t offset, std::span<float> out, bool swap) {
  std::memcpy(out.data(), bytes.data() + offset, out.size() * sizeof(float));
  if (swap) {
    for (float& f : out) f = std::bit_cast<float>(bswap32(std::bit_cast<std::uint32_t>(f)));
  }
}

inline void check_expected(const RasterHeader& h, std::optional<std::pair<int, int>> expected,
                           const std::string& name) {
  if (expected && (static_cast<int>(h.width) != expected->first || static_cast<int>(h.height) != expected->second)) {
    fail(Errc::dimension_mismatch, name + ": raster is " + std::to_string(h.width) + "x" + std::to_string(h.height) +
                                       ", expected " + std::to_string(expected->first) + "x" +
                                       std::to_string(expected->second));
  }
}

}  // namespace detail

inline std::string encode_energy(const EnergyMap& energy) {
  std::string out = "EGY1";
  detail::put_u32(out, static_cast<std::uint32_t>(energy.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(energy.height()));
  detail::put_u32(out, kEndianFlag);
  const auto v = energy.pixels();
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
  return out;
}

inline EnergyMap decode_energy(std::string_view bytes, std::optional<std::pair<int, int>> expected = std::nullopt,
                               const std::string& name = "energy") {
  const auto h = detail::parse_header(bytes, "EGY1", false, name);
  detail::check_expected(h, expected, name);
  EnergyMap energy(static_cast<int>(h.width), static_cast<int>(h.height));
  detail::copy_floats(bytes, h.header_bytes, energy.pixels(), h.swap);
  return energy;
}

inline void write_energy(const fs::path& path, const EnergyMap& energy) { write_text_file(path, encode_energy(energy)); }

inline EnergyMap read_energy(const fs::path& path, std::optional<std::pair<int, int>> expected = std::nullopt) {
  return decode_energy(read_text_file(path), expected, path.string());
}

inline std::string encode_logits(const LogitVolume& logits) {
  std::string out = "LGT1";
  detail::put_u32(out, static_cast<std::uint32_t>(logits.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(logits.height()));
  detail::put_u32(out, kEndianFlag);
  detail::put_u32(out, static_cast<std::uint32_t>(logits.classes()));
  const auto v = logits.values();
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
  return out;
}

inline LogitVolume decode_logits(std::string_view bytes, std::optional<std::pair<int, int>> expected = std::nullopt,
                                 const std::string& name = "logits") {
  const auto h = detail::parse_header(bytes, "LGT1", true, name);
  detail::check_expected(h, expected, name);
  if (h.classes < 2) fail(Errc::dimension_mismatch, name + ": fewer than 2 classes");
  LogitVolume logits(static_cast<int>(h.width), static_cast<int>(h.height), static_cast<int>(h.classes));
  detail::copy_floats(bytes, h.header_bytes, logits.values(), h.swap);
  return logits;
}

inline void write_logits(const fs::path& path, const LogitVolume& logits) {
  write_text_file(path, encode_logits(logits));
}

inline LogitVolume read_logits(const fs::path& path, std::optional<std::pair<int, int>> expected = std::nullopt) {
  return decode_logits(read_text_file(path), expected, path.string());
}

// ---------------------------------------------------------------------------
// Key-value text
//
// One `key = value` per line; blank lines and lines starting with '#' are
// skipped. Keys are unique. Values run to the end of the line with
// surrounding blanks removed.

class KeyValues {
 public:
  void set(std::string key, std::string value) {
    for (auto& [k, v] : entries_) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    entries_.emplace_back(std::move(key), std::move(value));
  }
  void set(std::string key, double value);
  void set(std::string key, std::int64_t value) { set(std::move(key), std::to_string(value)); }
  void set(std::string key, int value) { set(std::move(key), std::to_string(value)); }
  void set(std::string key, std::uint64_t value) { set(std::move(key), std::to_string(value)); }
  void set(std::string key, bool value) { set(std::move(key), std::string(value ? "true" : "false")); }
  void set(std::string key, const char* value) { set(std::move(key), std::string(value)); }

  bool contains(std::string_view key) const { return find(key) != nullptr; }

  const std::string& get(std::string_view key) const {
    const std::string* v = find(key);
    if (!v) fail(Errc::config_parse_error, "missing key '" + std::string(key) + "'");
    return *v;
  }

  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  bool get_bool(std::string_view key) const;

  template <class T>
  void read_if(std::string_view key, T& out) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  std::string to_text() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
  }

  static KeyValues parse(std::string_view text, const std::string& name = "config");

 private:
  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
      if (k == key) return &v;
    }
    return nullptr;
  }

  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest-safe decimal: %.17g round-trips every double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void KeyValues::set(std::string key, double value) { set(std::move(key), format_double(value)); }

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_value(std::string_view key, std::string_view s) {
  T v{};
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    fail(Errc::config_parse_error, "key '" + std::string(key) + "': cannot parse '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

inline KeyValues KeyValues::parse(std::string_view text, const std::string& name) {
  KeyValues kv;
  int line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(Errc::config_parse_error, name + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key.empty()) fail(Errc::config_parse_error, name + ":" + std::to_string(line_no) + ": empty key");
    if (kv.contains(key)) {
      fail(Errc::config_parse_error, name + ":" + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
    }
    kv.entries_.emplace_back(std::string(key), std::string(value));
  }
  return kv;
}

inline double KeyValues::get_double(std::string_view key) const {
  const std::string& s = get(key);
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return detail::parse_value<double>(key, s);
}

inline std::int64_t KeyValues::get_int(std::string_view key) const {
  return detail::parse_value<std::int64_t>(key, get(key));
}

inline std::uint64_t KeyValues::get_u64(std::string_view key) const {
  return detail::parse_value<std::uint64_t>(key, get(key));
}

inline bool KeyValues::get_bool(std::string_view key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  fail(Errc::config_parse_error, "key '" + std::string(key) + "': expected a boolean, got '" + s + "'");
}

template <class T>
void KeyValues::read_if(std::string_view key, T& out) const {
  if (!contains(key)) return;
  if constexpr (std::is_same_v<T, bool>) {
    out = get_bool(key);
  } else if constexpr (std::is_same_v<T, std::string>) {
    out = get(key);
  } else if constexpr (std::is_floating_point_v<T>) {
    out = static_cast<T>(get_double(key));
  } else if constexpr (std::is_unsigned_v<T>) {
    out = static_cast<T>(get_u64(key));
  } else {
    out = static_cast<T>(get_int(key));
  }
}

inline KeyValues read_key_values(const fs::path& path) { return KeyValues::parse(read_text_file(path), path.string()); }

// ---------------------------------------------------------------------------
// Camera and scene metadata

inline void put_camera(KeyValues& kv, const CameraModel& cam, const std::string& prefix = "camera.") {
  kv.set(prefix + "focal_length", cam.focal_length);
  kv.set(prefix + "cx", cam.cx);
  kv.set(prefix + "cy", cam.cy);
  kv.set(prefix + "width", cam.width);
  kv.set(prefix + "height", cam.height);
  kv.set(prefix + "mount_height", cam.mount_height);
  kv.set(prefix + "pitch", cam.pitch);
}

inline void read_camera(const KeyValues& kv, CameraModel& cam, const std::string& prefix = "camera.") {
  kv.read_if(prefix + "focal_length", cam.focal_length);
  kv.read_if(prefix + "cx", cam.cx);
  kv.read_if(prefix + "cy", cam.cy);
  kv.read_if(prefix + "width", cam.width);
  kv.read_if(prefix + "height", cam.height);
  kv.read_if(prefix + "mount_height", cam.mount_height);
  kv.read_if(prefix + "pitch", cam.pitch);
}

inline KeyValues meta_to_key_values(const SceneMeta& meta, const CameraModel& cam) {
  KeyValues kv;
  kv.set("has_obstacle", meta.has_obstacle);
  kv.set("obstacle_distance", meta.obstacle_distance);
  kv.set("near_edge_row", meta.near_edge_row);
  kv.set("corridor_top_row", meta.corridor_top_row);
  kv.set("sprite_id", meta.sprite_id.empty() ? std::string("-") : meta.sprite_id);
  kv.set("seed", meta.seed);
  kv.set("lane_width", meta.lane_width);
  kv.set("max_corridor_range", meta.max_corridor_range);
  kv.set("sprite_px_width", meta.sprite_px_width);
  kv.set("sprite_px_height", meta.sprite_px_height);
  if (meta.placement) {
    kv.set("placement.distance", meta.placement->distance);
    kv.set("placement.lateral_offset", meta.placement->lateral_offset);
    kv.set("placement.physical_width", meta.placement->physical_width);
    kv.set("placement.physical_height", meta.placement->physical_height);
    kv.set("placement.rotation", meta.placement->rotation);
  }
  put_camera(kv, cam);
  return kv;
}

inline SceneMeta meta_from_key_values(const KeyValues& kv, CameraModel& cam) {
  SceneMeta meta;
  meta.has_obstacle = kv.get_bool("has_obstacle");
  meta.obstacle_distance = kv.get_double("obstacle_distance");
  meta.near_edge_row = kv.get_double("near_edge_row");
  meta.corridor_top_row = static_cast<int>(kv.get_int("corridor_top_row"));
  meta.sprite_id = kv.get("sprite_id");
  if (meta.sprite_id == "-") meta.sprite_id.clear();
  meta.seed = kv.get_u64("seed");
  meta.lane_width = kv.get_double("lane_width");
  meta.max_corridor_range = kv.get_double("max_corridor_range");
  kv.read_if("sprite_px_width", meta.sprite_px_width);
  kv.read_if("sprite_px_height", meta.sprite_px_height);
  if (kv.contains("placement.distance")) {
    ObstaclePlacement p;
    p.distance = kv.get_double("placement.distance");
    p.lateral_offset = kv.get_double("placement.lateral_offset");
    p.physical_width = kv.get_double("placement.physical_width");
    p.physical_height = kv.get_double("placement.physical_height");
    p.rotation = kv.get_double("placement.rotation");
    meta.placement = p;
  }
  cam = CameraModel{};
  read_camera(kv, cam);
  cam.validate();
  return meta;
}

/// Writes image.png (when present), gt_corridor.png, gt_obstacle.png and
/// meta.txt into `dir`.
inline void save_scene(const fs::path& dir, const SceneRecord& scene) {
  fs::create_directories(dir);
  if (!scene.image.empty()) write_rgb_png(dir / "image.png", scene.image);
  write_mask_png(dir / "gt_corridor.png", scene.gt_corridor);
  write_mask_png(dir / "gt_obstacle.png", scene.gt_obstacle);
  write_text_file(dir / "meta.txt", meta_to_key_values(scene.meta, scene.camera).to_text());
}

inline SceneRecord load_scene(const fs::path& dir, bool with_image = false) {
  SceneRecord scene;
  scene.meta = meta_from_key_values(read_key_values(dir / "meta.txt"), scene.camera);
  scene.gt_corridor = read_mask_png(dir / "gt_corridor.png");
  scene.gt_obstacle = read_mask_png(dir / "gt_obstacle.png");
  const std::pair<int, int> dims{scene.camera.width, scene.camera.height};
  auto check = [&](int w, int h, const char* what) {
    if (w != dims.first || h != dims.second) {
      fail(Errc::format_mismatch, std::string(what) + " in '" + dir.string() + "' does not match the camera size");
    }
  };
  check(scene.gt_corridor.width(), scene.gt_corridor.height(), "gt_corridor.png");
  check(scene.gt_obstacle.width(), scene.gt_obstacle.height(), "gt_obstacle.png");
  if (with_image && fs::exists(dir / "image.png")) {
    scene.image = read_rgb_png(dir / "image.png");
    check(scene.image.width(), scene.image.height(), "image.png");
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Manifest: one record per line, space-separated key=value tokens. Values
// must not contain blanks.

using ManifestRecord = KeyValues;

inline std::string manifest_line(const ManifestRecord& rec) {
  std::string line;
  for (const auto& [k, v] : rec.entries()) {
    if (v.find_first_of(" \t\n") != std::string::npos || k.find_first_of(" \t\n=") != std::string::npos) {
      fail(Errc::invalid_argument, "manifest token '" + k + "=" + v + "' contains a blank");
    }
    if (!line.empty()) line += ' ';
    line += k + "=" + v;
  }
  return line;
}

inline std::string format_manifest(const std::vector<ManifestRecord>& records) {
  std::string out;
  for (const auto& rec : records) out += manifest_line(rec) + "\n";
  return out;
}

inline std::vector<ManifestRecord> parse_manifest(std::string_view text, const std::string& name = "manifest") {
  std::vector<ManifestRecord> records;
  int line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = detail::trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    ManifestRecord rec;
    while (!line.empty()) {
      const std::size_t sp = line.find(' ');
      const std::string_view tok = line.substr(0, sp);
      line = sp == std::string_view::npos ? std::string_view{} : detail::trim(line.substr(sp + 1));
      const std::size_t eq = tok.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        fail(Errc::config_parse_error, name + ":" + std::to_string(line_no) + ": bad token '" + std::string(tok) + "'");
      }
      if (rec.contains(tok.substr(0, eq))) {
        fail(Errc::config_parse_error, name + ":" + std::to_string(line_no) + ": duplicate key");
      }
      rec.set(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<ManifestRecord> read_manifest(const fs::path& path) {
  return parse_manifest(read_text_file(path), path.string());
}

}  // namespace corridor
