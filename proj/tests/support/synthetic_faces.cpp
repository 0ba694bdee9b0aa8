#include "synthetic_faces.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>

#include "provisim/image_io.hpp"

namespace provisim::testing {

namespace fs = std::filesystem;
using Vec2 = Eigen::Vector2d;
using trial::Emotion;

namespace {

struct Rgb {
  double r, g, b;
};

struct Expression {
  double smile;     // mouth corners up (+) or down (-)
  double open;      // 0 closed .. 1 wide open
  double brow_tilt; // inner ends up (+) or down (-)
  double brow_raise;
  double skew;      // asymmetric mouth and brows
};

Expression expression(Emotion e) {
  switch (e) {
    case Emotion::kHappy: return {1.0, 0.3, 0.0, 0.1, 0.0};
    case Emotion::kSad: return {-0.9, 0.0, 0.7, 0.0, 0.0};
    case Emotion::kSurprised: return {0.0, 1.0, 0.0, 1.0, 0.0};
    case Emotion::kDisgusted: return {-0.5, 0.15, -0.5, -0.6, 0.3};
    case Emotion::kAngry: return {-0.3, 0.0, -1.0, -0.7, 0.0};
    case Emotion::kConfused: return {0.1, 0.0, 0.2, 0.3, 1.0};
    case Emotion::kFearful: return {-0.3, 0.6, 0.9, 0.7, 0.0};
    case Emotion::kNeutral: return {0.0, 0.0, 0.0, 0.0, 0.0};
  }
  return {};
}

class Canvas {
 public:
  explicit Canvas(Index size)
      : size_(size), r_(size, size), g_(size, size), b_(size, size) {}

  // Blends `c` wherever `coverage` (a function of a point in normalised
  // coordinates and the sample size) is positive.
  void paint(const std::function<double(const Vec2&, double)>& coverage, Rgb c) {
    const double px = 1.0 / static_cast<double>(size_);
    for (Index y = 0; y < size_; ++y) {
      for (Index x = 0; x < size_; ++x) {
        const Vec2 p((static_cast<double>(x) + 0.5) * px, (static_cast<double>(y) + 0.5) * px);
        const double a = std::clamp(coverage(p, px), 0.0, 1.0);
        if (a <= 0) continue;
        r_(y, x) += a * (c.r - r_(y, x));
        g_(y, x) += a * (c.g - g_(y, x));
        b_(y, x) += a * (c.b - b_(y, x));
      }
    }
  }

  ColorImage image() const { return ColorImage(r_, g_, b_); }
  Plane<double>& red() { return r_; }
  Plane<double>& green() { return g_; }
  Plane<double>& blue() { return b_; }

 private:
  Index size_;
  Plane<double> r_, g_, b_;
};

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len = ab.squaredNorm();
  const double t = len > 0 ? std::clamp((p - a).dot(ab) / len, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

double polyline_distance(const Vec2& p, const std::vector<Vec2>& pts, bool closed) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) d = std::min(d, segment_distance(p, pts[i], pts[i + 1]));
  if (closed && pts.size() > 2) d = std::min(d, segment_distance(p, pts.back(), pts.front()));
  return d;
}

bool inside_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    if ((poly[i].y() > p.y()) != (poly[j].y() > p.y()) &&
        p.x() < (poly[j].x() - poly[i].x()) * (p.y() - poly[i].y()) / (poly[j].y() - poly[i].y()) +
                    poly[i].x()) {
      in = !in;
    }
  }
  return in;
}

auto ellipse(Vec2 c, double rx, double ry) {
  return [=](const Vec2& p, double px) {
    const Vec2 q((p.x() - c.x()) / rx, (p.y() - c.y()) / ry);
    // signed distance approximated through the smaller radius
    const double d = (q.norm() - 1.0) * std::min(rx, ry);
    return 0.5 - d / px;
  };
}

auto polygon(std::vector<Vec2> poly) {
  return [poly = std::move(poly)](const Vec2& p, double px) {
    const double d = polyline_distance(p, poly, true) / px;
    return inside_polygon(p, poly) ? 0.5 + d : 0.5 - d;
  };
}

auto stroke(std::vector<Vec2> pts, double width) {
  return [pts = std::move(pts), width](const Vec2& p, double px) {
    return (width / 2 - polyline_distance(p, pts, false)) / px + 0.5;
  };
}

std::vector<Vec2> circle_points(Vec2 c, double r, int n) {
  std::vector<Vec2> out;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * i / n;
    out.emplace_back(c.x() + r * std::cos(a), c.y() + r * std::sin(a));
  }
  return out;
}

}  // namespace

Face render_face(const FaceSpec& spec, Index size) {
  const Expression ex = expression(spec.emotion);
  const bool female = spec.gender == "female";
  const int id = spec.person;
  // identity parameters
  const double face_rx = 0.25 + 0.02 * (id % 3);
  const double face_ry = 0.33 + 0.015 * ((id / 3) % 2);
  const double eye_sep = 0.105 + 0.01 * (id % 2);
  const double tone = 0.55 + 0.07 * ((id * 5) % 5);
  const Rgb skin{std::min(1.0, tone + 0.15), tone, tone * 0.8};
  const double hair_shade = 0.12 + 0.08 * ((id * 3) % 4);
  const Rgb hair{hair_shade * 1.2, hair_shade, hair_shade * 0.8};

  Canvas canvas(size);
  for (Index y = 0; y < size; ++y) {
    const double v = 0.85 - 0.1 * static_cast<double>(y) / static_cast<double>(size);
    canvas.red().row(y).setConstant(v * 0.9);
    canvas.green().row(y).setConstant(v * 0.95);
    canvas.blue().row(y).setConstant(v);
  }

  if (female) {
    canvas.paint(ellipse({0.5, 0.5}, face_rx + 0.1, 0.43), hair);
  } else {
    canvas.paint(ellipse({0.5, 0.3}, face_rx + 0.03, 0.16), hair);
  }
  canvas.paint(ellipse({0.5, 0.52}, face_rx, face_ry), skin);

  LandmarkSet lm;
  auto add_contour = [&lm](ContourName name, const std::vector<Vec2>& pts, bool closed) {
    Contour c{name, {}, closed};
    for (const Vec2& p : pts) {
      c.indices.push_back(lm.points.size());
      lm.points.push_back(p);
    }
    lm.contours.push_back(std::move(c));
  };

  const double eye_y = 0.45;
  for (int side : {-1, 1}) {
    const Vec2 eye(0.5 + side * eye_sep, eye_y);
    canvas.paint(ellipse(eye, 0.055, 0.028), {0.95, 0.95, 0.95});
    const std::vector<Vec2> iris = circle_points(eye, 0.022, 8);
    canvas.paint(ellipse(eye, 0.022, 0.022), {0.2, 0.25, 0.3});
    add_contour(side < 0 ? ContourName::kLeftIris : ContourName::kRightIris, iris, true);

    std::vector<Vec2> brow;
    const double skew = ex.skew * 0.02 * side;
    for (int i = 0; i < 5; ++i) {
      const double t = i / 4.0;  // 0 at the inner end
      const double x = eye.x() + side * (0.01 + 0.08 * t);
      const double arch = 0.012 * std::sin(std::numbers::pi * t);
      const double y = eye_y - 0.065 - 0.03 * ex.brow_raise - arch - 0.025 * ex.brow_tilt * (1 - t) + skew;
      brow.emplace_back(x, y);
    }
    canvas.paint(stroke(brow, 0.014), hair);
    add_contour(side < 0 ? ContourName::kLeftEyebrow : ContourName::kRightEyebrow, brow, false);
  }

  // mouth: centreline bent by the smile, lips around it
  const double mouth_y = 0.52 + face_ry * 0.5;
  const double half_w = 0.085;
  auto centre = [&](double s) { return mouth_y - ex.smile * 0.03 * s * s + ex.skew * 0.015 * s; };
  const double upper = 0.014 + ex.open * 0.012;
  const double lower = 0.018 + ex.open * 0.03;
  const double gap = ex.open * 0.022;
  // half-ellipse profile, clamped against rounding at the corners
  auto lip = [](double s) { return std::sqrt(std::max(0.0, 1 - s * s)); };
  std::vector<Vec2> outer, inner;
  constexpr int kSteps = 8;
  for (int i = 0; i <= kSteps; ++i) {
    const double s = -1.0 + 2.0 * i / kSteps;
    outer.emplace_back(0.5 + half_w * s, centre(s) - upper * lip(s));
  }
  for (int i = kSteps - 1; i > 0; --i) {
    const double s = -1.0 + 2.0 * i / kSteps;
    outer.emplace_back(0.5 + half_w * s, centre(s) + lower * lip(s));
  }
  for (int i = 0; i <= kSteps; ++i) {
    const double s = -0.8 + 1.6 * i / kSteps;
    inner.emplace_back(0.5 + half_w * s, centre(s) - gap * 0.4 * lip(s / 0.8));
  }
  for (int i = kSteps - 1; i > 0; --i) {
    const double s = -0.8 + 1.6 * i / kSteps;
    inner.emplace_back(0.5 + half_w * s, centre(s) + gap * lip(s / 0.8));
  }
  canvas.paint(polygon(outer), {0.75, 0.35, 0.35});
  if (ex.open > 0) canvas.paint(polygon(inner), {0.15, 0.05, 0.05});
  add_contour(ContourName::kOuterLips, outer, true);
  add_contour(ContourName::kInnerLips, inner, true);

  std::sort(lm.contours.begin(), lm.contours.end(),
            [](const Contour& a, const Contour& b) { return a.name < b.name; });
  validate(lm);
  return {canvas.image(), std::move(lm)};
}

std::vector<trial::Stimulus> write_face_corpus(const fs::path& dir, int persons, Index size) {
  fs::create_directories(dir);
  std::vector<trial::Stimulus> out;
  for (int person = 0; person < persons; ++person) {
    const std::string gender = person % 2 == 0 ? "female" : "male";
    for (Emotion e : trial::kEmotions) {
      const Face face = render_face({person, gender, e}, size);
      char stem[64];
      std::snprintf(stem, sizeof stem, "p%02d_%s", person, std::string(trial::to_string(e)).c_str());
      save_color_png(face.image, dir / (std::string(stem) + ".png"));
      std::ofstream(dir / (std::string(stem) + ".landmarks.json")) << serialize_landmarks(face.landmarks);
      trial::Stimulus s;
      s.id = stem;
      s.image = std::string(stem) + ".png";
      s.landmarks = std::string(stem) + ".landmarks.json";
      s.person = "p" + std::to_string(person);
      s.gender = gender;
      s.emotion = e;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string plan_request_json(const std::vector<trial::Stimulus>& stimuli,
                              const std::vector<std::pair<std::string, std::string>>& phases,
                              const fs::path& base_dir, int repetitions) {
  nlohmann::ordered_json doc;
  doc["name"] = "synthetic";
  doc["base_dir"] = base_dir.string();
  doc["phases"] = nlohmann::ordered_json::array();
  for (const auto& [name, preset] : phases) doc["phases"].push_back({{"name", name}, {"preset", preset}});
  doc["question_types"] = {"odd_one_out", "gender", "emotion"};
  doc["repetitions_per_type"] = repetitions;
  doc["time_limit_s"] = 20;
  doc["stimuli"] = nlohmann::ordered_json::array();
  for (const trial::Stimulus& s : stimuli) {
    doc["stimuli"].push_back({{"id", s.id},
                              {"image", s.image.string()},
                              {"landmarks", s.landmarks.string()},
                              {"person", s.person},
                              {"gender", s.gender},
                              {"emotion", std::string(trial::to_string(s.emotion))}});
  }
  return doc.dump(2);
}

fs::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  const fs::path dir = fs::temp_directory_path() /
                       ("provisim-" + tag + "-" + std::to_string(rng() % 1000000000ULL));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace provisim::testing
