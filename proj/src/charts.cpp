#include "provisim/charts.hpp"

#include <cmath>
#include <numbers>

namespace provisim {

std::string_view to_string(Orientation o) {
  switch (o) {
    case Orientation::kUp: return "up";
    case Orientation::kDown: return "down";
    case Orientation::kLeft: return "left";
    case Orientation::kRight: return "right";
  }
  return "up";
}

std::optional<Orientation> parse_orientation(std::string_view name) {
  for (Orientation o : kOrientations) {
    if (to_string(o) == name) return o;
  }
  return std::nullopt;
}

void validate(const LandoltSpec& spec) {
  if (!(spec.gap_pixels > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "Landolt gap must be positive");
  }
  if (!(spec.grid_extent > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "grid extent must be positive");
  }
  if (static_cast<double>(spec.raster_size) < 2.0 * spec.grid_extent) {
    throw Error(ErrorCode::kInvalidArgument,
                "raster size must be at least twice the grid extent");
  }
  if (spec.supersample < 4) {
    throw Error(ErrorCode::kInvalidArgument, "supersampling factor must be at least 4");
  }
  if (spec.outer_diameter() > spec.grid_extent) {
    throw Error(ErrorCode::kInvalidArgument, "Landolt C diameter exceeds the field");
  }
}

Image render_landolt(const LandoltSpec& spec) {
  validate(spec);
  const Index n = spec.raster_size;
  const int ss = spec.supersample;
  const double g = spec.gap_pixels;
  const double inner_sq = (1.5 * g) * (1.5 * g);
  const double outer_sq = (2.5 * g) * (2.5 * g);
  const double half_gap = 0.5 * g;
  // Subsample offsets from the field centre are odd integers in units of half a
  // subsample; keeping them integral makes the four orientations exact
  // rotations of one another.
  const double unit = 2.0 * ss * spec.samples_per_pixel();
  const long long span = static_cast<long long>(n) * ss;

  auto in_gap = [&](double px, double py) {
    switch (spec.orientation) {
      case Orientation::kRight: return px > 0 && std::abs(py) < half_gap;
      case Orientation::kLeft: return px < 0 && std::abs(py) < half_gap;
      case Orientation::kUp: return py < 0 && std::abs(px) < half_gap;
      case Orientation::kDown: return py > 0 && std::abs(px) < half_gap;
    }
    return false;
  };

  Plane<double> out(n, n);
  const double per_sample = 1.0 / (ss * ss);
  for (Index y = 0; y < n; ++y) {
    for (Index x = 0; x < n; ++x) {
      int ink = 0;
      for (int j = 0; j < ss; ++j) {
        const double py = static_cast<double>(2 * (y * ss + j) + 1 - span) / unit;
        for (int i = 0; i < ss; ++i) {
          const double px = static_cast<double>(2 * (x * ss + i) + 1 - span) / unit;
          const double r_sq = px * px + py * py;
          if (r_sq >= inner_sq && r_sq <= outer_sq && !in_gap(px, py)) ++ink;
        }
      }
      const double coverage = ink * per_sample;
      out(y, x) = spec.invert ? coverage : 1.0 - coverage;
    }
  }
  return Image(out);
}

double normalized_cross_correlation(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::kInvalidArgument, "cross-correlation needs equal extents");
  }
  const Plane<double> da = a.values() - a.mean();
  const Plane<double> db = b.values() - b.mean();
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  if (denom <= 1e-300) return 0.0;
  return (da * db).sum() / denom;
}

std::array<Image, 4> degraded_templates(const LandoltSpec& spec, const Degradation& degrade) {
  auto make = [&](Orientation o) {
    LandoltSpec s = spec;
    s.orientation = o;
    Image clean = render_landolt(s);
    return degrade ? degrade(clean) : clean;
  };
  return {make(kOrientations[0]), make(kOrientations[1]), make(kOrientations[2]),
          make(kOrientations[3])};
}

Orientation classify_against(const Image& img, const std::array<Image, 4>& templates) {
  Orientation best = kOrientations[0];
  double best_score = normalized_cross_correlation(img, templates[0]);
  for (std::size_t k = 1; k < templates.size(); ++k) {
    const double score = normalized_cross_correlation(img, templates[k]);
    if (score > best_score) {
      best_score = score;
      best = kOrientations[k];
    }
  }
  return best;
}

Orientation classify_gap_orientation(const Image& img, const LandoltSpec& spec,
                                     const Degradation& degrade) {
  return classify_against(img, degraded_templates(spec, degrade));
}

void validate(const CampbellRobsonSpec& spec) {
  if (spec.raster_size < 2) {
    throw Error(ErrorCode::kInvalidArgument, "chart needs at least 2 samples per side");
  }
  if (!(spec.freq_min > 0) || !(spec.freq_max >= spec.freq_min)) {
    throw Error(ErrorCode::kInvalidArgument, "frequency range must satisfy 0 < min <= max");
  }
  if (!(spec.contrast_min > 0) || !(spec.contrast_max >= spec.contrast_min) ||
      spec.contrast_max > 1) {
    throw Error(ErrorCode::kInvalidArgument, "contrast range must satisfy 0 < min <= max <= 1");
  }
  if (!(spec.mean_luminance > 0 && spec.mean_luminance < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "mean luminance must lie in (0,1)");
  }
}

namespace {

double column_position(const CampbellRobsonSpec& spec, Index x) {
  return (static_cast<double>(x) + 0.5) / static_cast<double>(spec.raster_size);
}

// Integral of the instantaneous frequency from the left edge, in cycles.
double chirp_phase(const CampbellRobsonSpec& spec, double t) {
  const double ratio = spec.freq_max / spec.freq_min;
  if (ratio == 1.0) return spec.freq_min * t;
  const double log_ratio = std::log(ratio);
  return spec.freq_min * std::expm1(t * log_ratio) / log_ratio;
}

}  // namespace

double campbell_robson_frequency(const CampbellRobsonSpec& spec, Index x) {
  return spec.freq_min * std::pow(spec.freq_max / spec.freq_min, column_position(spec, x));
}

double campbell_robson_contrast(const CampbellRobsonSpec& spec, Index y) {
  const double t = static_cast<double>(y) / static_cast<double>(spec.raster_size - 1);
  return spec.contrast_min * std::pow(spec.contrast_max / spec.contrast_min, t);
}

Image render_campbell_robson(const CampbellRobsonSpec& spec) {
  validate(spec);
  const Index n = spec.raster_size;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  Eigen::RowVectorXd phase(n);
  for (Index x = 0; x < n; ++x) phase(x) = kTwoPi * chirp_phase(spec, column_position(spec, x));

  // The chirp covers a non-integral number of cycles, so the phase origin is
  // chosen to make every row average exactly to the mean luminance.
  const double sin_sum = phase.array().sin().sum();
  const double cos_sum = phase.array().cos().sum();
  const double origin = std::atan2(-sin_sum, cos_sum);
  const Eigen::RowVectorXd wave = (phase.array() + origin).sin().matrix();

  Plane<double> out(n, n);
  for (Index y = 0; y < n; ++y) {
    const double amplitude = spec.mean_luminance * campbell_robson_contrast(spec, y);
    out.row(y) = spec.mean_luminance + amplitude * wave.array();
  }
  return Image(out);
}

}  // namespace provisim
