#include "provisim/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <nlohmann/json.hpp>
#include <sstream>

namespace provisim {

using nlohmann::json;

std::string_view to_string(ContourName name) {
  switch (name) {
    case ContourName::kLeftEyebrow: return "left_eyebrow";
    case ContourName::kRightEyebrow: return "right_eyebrow";
    case ContourName::kLeftIris: return "left_iris";
    case ContourName::kRightIris: return "right_iris";
    case ContourName::kOuterLips: return "outer_lips";
    case ContourName::kInnerLips: return "inner_lips";
  }
  return "";
}

std::optional<ContourName> parse_contour_name(std::string_view name) {
  for (ContourName c : kContourNames) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

bool is_iris(ContourName name) {
  return name == ContourName::kLeftIris || name == ContourName::kRightIris;
}

std::string_view to_string(ColorMode mode) {
  return mode == ColorMode::kAbsolute ? "absolute" : "relative";
}

const Contour* LandmarkSet::find(ContourName name) const {
  for (const Contour& c : contours) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void validate(const LandmarkSet& lm) {
  for (std::size_t i = 0; i < lm.points.size(); ++i) {
    const Eigen::Vector2d& p = lm.points[i];
    if (!(p.x() >= 0 && p.x() <= 1 && p.y() >= 0 && p.y() <= 1)) {
      std::ostringstream msg;
      msg << "landmark " << i << " at (" << p.x() << ", " << p.y() << ") lies outside [0,1]^2";
      throw Error(ErrorCode::kLandmarkCoordinateRange, msg.str());
    }
  }
  for (const Contour& c : lm.contours) {
    if (c.indices.size() < 2) {
      throw Error(ErrorCode::kMalformedLandmarks,
                  std::string(to_string(c.name)) + " needs at least 2 points");
    }
    for (std::size_t idx : c.indices) {
      if (idx >= lm.points.size()) {
        throw Error(ErrorCode::kLandmarkIndexOutOfRange,
                    std::string(to_string(c.name)) + " references point " + std::to_string(idx) +
                        " of " + std::to_string(lm.points.size()));
      }
    }
  }
}

LandmarkSet parse_landmarks(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedLandmarks, std::string("landmark JSON: ") + e.what());
  }
  auto malformed = [](const std::string& what) {
    return Error(ErrorCode::kMalformedLandmarks, "landmark JSON: " + what);
  };
  if (!doc.is_object() || !doc.contains("points") || !doc.contains("contours")) {
    throw malformed("expected an object with \"points\" and \"contours\"");
  }
  const json& points = doc["points"];
  const json& contours = doc["contours"];
  if (!points.is_array() || !contours.is_object()) {
    throw malformed("\"points\" must be an array and \"contours\" an object");
  }

  LandmarkSet lm;
  lm.points.reserve(points.size());
  for (const json& p : points) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw malformed("each point must be [x, y]");
    }
    lm.points.emplace_back(p[0].get<double>(), p[1].get<double>());
  }

  for (const auto& [key, value] : contours.items()) {
    const auto name = parse_contour_name(key);
    if (!name) {
      throw Error(ErrorCode::kUnknownContour, "landmark JSON: unknown contour \"" + key + "\"");
    }
    if (!value.is_object() || !value.contains("indices") || !value["indices"].is_array()) {
      throw malformed("contour \"" + key + "\" needs an \"indices\" array");
    }
    Contour c{*name, {}, false};
    for (const json& idx : value["indices"]) {
      if (!idx.is_number_integer() || idx.get<long long>() < 0) {
        throw malformed("contour \"" + key + "\" has a non-integer or negative index");
      }
      c.indices.push_back(idx.get<std::size_t>());
    }
    if (value.contains("closed")) {
      if (!value["closed"].is_boolean()) throw malformed("\"closed\" must be a boolean");
      c.closed = value["closed"].get<bool>();
    }
    lm.contours.push_back(std::move(c));
  }
  std::sort(lm.contours.begin(), lm.contours.end(),
            [](const Contour& a, const Contour& b) { return a.name < b.name; });

  validate(lm);
  for (ContourName required : kContourNames) {
    if (!lm.find(required)) {
      throw Error(ErrorCode::kMissingContour,
                  "landmark JSON: missing contour \"" + std::string(to_string(required)) + "\"");
    }
  }
  return lm;
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kUnreadable, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_landmarks(buffer.str());
}

std::string serialize_landmarks(const LandmarkSet& lm) {
  json doc;
  doc["points"] = json::array();
  for (const Eigen::Vector2d& p : lm.points) doc["points"].push_back({p.x(), p.y()});
  doc["contours"] = json::object();
  for (const Contour& c : lm.contours) {
    doc["contours"][std::string(to_string(c.name))] = {{"indices", c.indices},
                                                       {"closed", c.closed}};
  }
  return doc.dump(2);
}

void validate(const EnhanceStyle& style) {
  if (!(style.thickness_implant_px > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "stroke thickness must be positive");
  }
  if (!(style.absolute_value >= 0 && style.absolute_value <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "absolute stroke value must lie in [0,1]");
  }
  if (!(style.darken_factor >= 0 && style.darken_factor <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "darken factor must lie in [0,1]");
  }
}

double stroke_width_samples(const EnhanceStyle& style, Index image_width, double grid_extent) {
  return style.thickness_implant_px * static_cast<double>(image_width) / grid_extent;
}

namespace {

using Vec2 = Eigen::Vector2d;

struct Segment {
  Vec2 a, b;
};

double distance_to_segment(const Vec2& p, const Segment& s) {
  const Vec2 ab = s.b - s.a;
  const double len_sq = ab.squaredNorm();
  double t = len_sq > 0 ? (p - s.a).dot(ab) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (s.a + t * ab)).norm();
}

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; counter-clockwise in a y-up frame.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool inside_convex(const Vec2& p, const std::vector<Vec2>& hull) {
  if (hull.size() < 3) return false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (cross(hull[i], hull[(i + 1) % hull.size()], p) < 0) return false;
  }
  return true;
}

struct Raster {
  Index width, height;
};

struct Box {
  Index x0, y0, x1, y1;  // inclusive
};

Box bounds(const std::vector<Vec2>& pts, double margin, const Raster& r) {
  double minx = std::numeric_limits<double>::infinity(), miny = minx;
  double maxx = -minx, maxy = -minx;
  for (const Vec2& p : pts) {
    minx = std::min(minx, p.x());
    maxx = std::max(maxx, p.x());
    miny = std::min(miny, p.y());
    maxy = std::max(maxy, p.y());
  }
  auto lo = [](double v, Index n) {
    return std::clamp<Index>(static_cast<Index>(std::floor(v)), 0, n - 1);
  };
  return {lo(minx - margin, r.width), lo(miny - margin, r.height), lo(maxx + margin, r.width),
          lo(maxy + margin, r.height)};
}

}  // namespace

Image enhance_features(const Image& img, const LandmarkSet& lm, const EnhanceStyle& style,
                       double grid_extent) {
  validate(style);
  validate(lm);
  if (!(grid_extent > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "grid extent must be positive");
  }
  const Raster raster{img.width(), img.height()};
  const double width = stroke_width_samples(style, img.width(), grid_extent);
  const double reach = 0.5 * width + 0.5;
  const double samples_per_implant_px = static_cast<double>(img.width()) / grid_extent;
  const Plane<double>& original = img.values();

  // Darkest candidate per sample; +inf where no stroke lands.
  Plane<double> best =
      Plane<double>::Constant(img.height(), img.width(), std::numeric_limits<double>::infinity());

  for (const Contour& contour : lm.contours) {
    std::vector<Vec2> pts;
    pts.reserve(contour.indices.size());
    for (std::size_t idx : contour.indices) {
      const Vec2& p = lm.points[idx];
      pts.emplace_back(p.x() * static_cast<double>(raster.width),
                       p.y() * static_cast<double>(raster.height));
    }
    std::vector<Segment> segments;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) segments.push_back({pts[i], pts[i + 1]});
    if (contour.closed && pts.size() > 2) segments.push_back({pts.back(), pts.front()});

    std::vector<Vec2> hull;
    if (contour.closed && is_iris(contour.name)) {
      const Eigen::Vector2d lo = std::accumulate(
          pts.begin(), pts.end(), pts.front(), [](Vec2 a, const Vec2& b) { return Vec2(a.cwiseMin(b)); });
      const Eigen::Vector2d hi = std::accumulate(
          pts.begin(), pts.end(), pts.front(), [](Vec2 a, const Vec2& b) { return Vec2(a.cwiseMax(b)); });
      if ((hi - lo).maxCoeff() < 3.0 * samples_per_implant_px) hull = convex_hull(pts);
    }

    const Box box = bounds(pts, reach + 1.0, raster);
    auto min_distance = [&](const Vec2& c) {
      double d = std::numeric_limits<double>::infinity();
      for (const Segment& s : segments) d = std::min(d, distance_to_segment(c, s));
      return d;
    };

    double value = style.absolute_value;
    if (style.color_mode == ColorMode::kRelative) {
      double sum = 0.0;
      int count = 0;
      const Box near = bounds(pts, 2.0, raster);
      for (Index y = near.y0; y <= near.y1; ++y) {
        for (Index x = near.x0; x <= near.x1; ++x) {
          const Vec2 c(static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5);
          if (min_distance(c) <= 1.0) {
            sum += original(y, x);
            ++count;
          }
        }
      }
      if (count == 0) {
        const Index x = std::clamp<Index>(static_cast<Index>(pts.front().x()), 0, raster.width - 1);
        const Index y = std::clamp<Index>(static_cast<Index>(pts.front().y()), 0, raster.height - 1);
        sum = original(y, x);
        count = 1;
      }
      value = style.darken_factor * sum / count;
    }

    for (Index y = box.y0; y <= box.y1; ++y) {
      for (Index x = box.x0; x <= box.x1; ++x) {
        const Vec2 c(static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5);
        double coverage = std::clamp(reach - min_distance(c), 0.0, 1.0);
        if (!hull.empty() && inside_convex(c, hull)) coverage = 1.0;
        if (coverage <= 0.0) continue;
        const double orig = original(y, x);
        double candidate = (1.0 - coverage) * orig + coverage * value;
        if (style.color_mode == ColorMode::kRelative) candidate = std::min(candidate, orig);
        best(y, x) = std::min(best(y, x), candidate);
      }
    }
  }

  return Image((best == std::numeric_limits<double>::infinity()).select(original, best));
}

}  // namespace provisim
