#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string_view>

#include "provisim/image.hpp"

namespace provisim {

enum class Orientation { kUp, kDown, kLeft, kRight };

inline constexpr std::array<Orientation, 4> kOrientations = {
    Orientation::kUp, Orientation::kDown, Orientation::kLeft, Orientation::kRight};

std::string_view to_string(Orientation o);
std::optional<Orientation> parse_orientation(std::string_view name);

/// Landolt C centred in a square field of `grid_extent` implant pixels,
/// rasterised at `raster_size` samples per side. Proportions follow ISO 8596:
/// stroke = gap, outer diameter = 5 gaps.
struct LandoltSpec {
  double gap_pixels = 1.2;
  Orientation orientation = Orientation::kRight;
  double grid_extent = 20.0;
  Index raster_size = 200;
  bool invert = false;  // light letter on a dark field
  int supersample = 8;

  double outer_diameter() const { return 5.0 * gap_pixels; }
  double samples_per_pixel() const { return static_cast<double>(raster_size) / grid_extent; }
};

void validate(const LandoltSpec& spec);

Image render_landolt(const LandoltSpec& spec);

using Degradation = std::function<Image(const Image&)>;

/// Matched-filter orientation estimate. Each clean template is pushed through
/// `degrade` and compared to `img` by zero-mean normalised cross-correlation;
/// ties resolve in the order up, down, left, right.
Orientation classify_gap_orientation(const Image& img, const LandoltSpec& spec,
                                     const Degradation& degrade = {});

/// Same, with precomputed degraded templates indexed like kOrientations.
Orientation classify_against(const Image& img, const std::array<Image, 4>& templates);

std::array<Image, 4> degraded_templates(const LandoltSpec& spec, const Degradation& degrade);

double normalized_cross_correlation(const Image& a, const Image& b);

/// Chirped grating: frequency rises log-linearly left to right, contrast rises
/// log-linearly top to bottom (maximum on the bottom row).
struct CampbellRobsonSpec {
  Index raster_size = 512;
  double freq_min = 1.0;    // cycles per image
  double freq_max = 64.0;
  double contrast_min = 0.005;
  double contrast_max = 1.0;
  double mean_luminance = 0.5;
};

void validate(const CampbellRobsonSpec& spec);

Image render_campbell_robson(const CampbellRobsonSpec& spec);

/// Instantaneous frequency (cycles per image) at column `x`.
double campbell_robson_frequency(const CampbellRobsonSpec& spec, Index x);
/// Michelson contrast assigned to row `y`.
double campbell_robson_contrast(const CampbellRobsonSpec& spec, Index y);

}  // namespace provisim
