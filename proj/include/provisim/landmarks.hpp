#pragma once

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "provisim/image.hpp"

namespace provisim {

enum class ContourName { kLeftEyebrow, kRightEyebrow, kLeftIris, kRightIris, kOuterLips, kInnerLips };

inline constexpr std::array<ContourName, 6> kContourNames = {
    ContourName::kLeftEyebrow, ContourName::kRightEyebrow, ContourName::kLeftIris,
    ContourName::kRightIris,   ContourName::kOuterLips,    ContourName::kInnerLips};

std::string_view to_string(ContourName name);
std::optional<ContourName> parse_contour_name(std::string_view name);
bool is_iris(ContourName name);

struct Contour {
  ContourName name;
  std::vector<std::size_t> indices;
  bool closed = false;
};

/// Facial landmarks in normalised image coordinates: (0,0) is the top-left
/// corner of the image, (1,1) the bottom-right.
struct LandmarkSet {
  std::vector<Eigen::Vector2d> points;
  std::vector<Contour> contours;

  const Contour* find(ContourName name) const;
};

/// Throws kLandmarkIndexOutOfRange, kLandmarkCoordinateRange or
/// kMalformedLandmarks.
void validate(const LandmarkSet& lm);

/// Parses the landmark JSON document. All six contours are required.
LandmarkSet parse_landmarks(std::string_view json_text);
LandmarkSet load_landmarks(const std::filesystem::path& path);
std::string serialize_landmarks(const LandmarkSet& lm);

enum class ColorMode { kAbsolute, kRelative };

std::string_view to_string(ColorMode mode);

struct EnhanceStyle {
  double thickness_implant_px = 0.7;
  ColorMode color_mode = ColorMode::kAbsolute;
  double absolute_value = 0.0;  // absolute mode: stroke luminance
  double darken_factor = 0.5;   // relative mode: fraction of the feature's own luminance

  friend bool operator==(const EnhanceStyle&, const EnhanceStyle&) = default;
};

void validate(const EnhanceStyle& style);

/// Stroke width in image samples for a thickness given in implant pixels.
double stroke_width_samples(const EnhanceStyle& style, Index image_width, double grid_extent);

/// Strokes every contour of `lm` onto `img` as an anti-aliased polyline.
///
/// Coverage at a sample is clamp(w/2 + 1/2 - d, 0, 1), d being the distance
/// from the sample centre to the polyline. The stroke colour is either
/// `absolute_value` or `darken_factor` times the mean original luminance of
/// samples within one sample of the contour; relative strokes never lighten a
/// sample. Where strokes overlap the darker result wins. Closed iris contours
/// spanning fewer than 3 implant pixels are additionally filled.
Image enhance_features(const Image& img, const LandmarkSet& lm, const EnhanceStyle& style,
                       double grid_extent);

}  // namespace provisim
