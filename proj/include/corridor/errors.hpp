#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace corridor {

enum class Errc {
  invalid_argument,
  distance_behind_camera,
  row_out_of_image,
  above_horizon,
  sprite_not_found,
  placement_off_image,
  empty_sprite,
  infeasible_constraints,
  insufficient_sprites,
  incompatible_dimensions,
  non_finite_logits,
  no_obstacle_in_scene,
  empty_bin,
  config_parse_error,
  io_failure,
  format_mismatch,
  bad_magic,
  truncated_file,
  dimension_mismatch,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::distance_behind_camera: return "DistanceBehindCamera";
    case Errc::row_out_of_image: return "RowOutOfImage";
    case Errc::above_horizon: return "AboveHorizon";
    case Errc::sprite_not_found: return "SpriteNotFound";
    case Errc::placement_off_image: return "PlacementOffImage";
    case Errc::empty_sprite: return "EmptySprite";
    case Errc::infeasible_constraints: return "InfeasibleConstraints";
    case Errc::insufficient_sprites: return "InsufficientSprites";
    case Errc::incompatible_dimensions: return "IncompatibleDimensions";
    case Errc::non_finite_logits: return "NonFiniteLogits";
    case Errc::no_obstacle_in_scene: return "NoObstacleInScene";
    case Errc::empty_bin: return "EmptyBin";
    case Errc::config_parse_error: return "ConfigParseError";
    case Errc::io_failure: return "IoFailure";
    case Errc::format_mismatch: return "FormatMismatch";
    case Errc::bad_magic: return "BadMagic";
    case Errc::truncated_file: return "TruncatedFile";
    case Errc::dimension_mismatch: return "DimensionMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can print a stable, machine-parsable error line.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace corridor
