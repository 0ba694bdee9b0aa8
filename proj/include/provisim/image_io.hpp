#pragma once

#include <filesystem>

#include "provisim/image.hpp"

namespace provisim {

// Images cross the file boundary as 8-bit samples: v -> round(255 v).
// Supported containers are PNG (any bit depth / colour type libpng can expand)
// and binary PGM (P5, maxval <= 255). The format is chosen by file content on
// load and by extension on save.

ColorImage load_image(const std::filesystem::path& path);

/// Single-channel 8-bit PNG or P5 PGM, chosen by extension (.png / .pgm).
void save_image(const Image& img, const std::filesystem::path& path);

/// Three-channel 8-bit PNG.
void save_color_png(const ColorImage& img, const std::filesystem::path& path);

/// Largest accepted width * height; anything above is a dimension overflow.
inline constexpr std::uint64_t kMaxSamples = std::uint64_t{1} << 28;

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace provisim
