#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "provisim/tone.hpp"

using namespace provisim;

namespace {

// Independent closed forms.
double ref_sigmoid(double x, double g, double s) { return 1.0 / (1.0 + std::exp(-g * (x - s))); }
double ref_sigmoid_inverse(double y, double g, double s) { return s - std::log(1.0 / y - 1.0) / g; }

template <typename Scalar, typename Curve>
Scalar worst_inverse_forward(const Curve& c, int samples, double hi = 1.0) {
  Scalar worst = 0;
  for (int i = 0; i < samples; ++i) {
    const Scalar x = Scalar(hi) * Scalar(i) / Scalar(samples - 1);
    worst = std::max(worst, std::abs(curve_invert<Scalar>(curve_apply<Scalar>(x, c), c) - x));
  }
  return worst;
}

}  // namespace

TEST_CASE("tone curves reject bad parameters") {
  CHECK_THROWS_AS(GammaCurve<double>(0.0), Error);
  CHECK_THROWS_AS(GammaCurve<double>(-1.0), Error);
  CHECK_THROWS_AS(GammaCurve<double>(std::numeric_limits<double>::infinity()), Error);
  CHECK_THROWS_AS(SigmoidCurve<double>(0.0, 0.2), Error);
  CHECK_THROWS_AS(SigmoidCurve<double>(10.0, 1.2), Error);
  CHECK_THROWS_AS(SigmoidCurve<double>(10.0, std::numeric_limits<double>::quiet_NaN()), Error);
}

TEST_CASE("gamma matches the power law and fixes the endpoints") {
  for (double g : kGammaPresets) {
    const GammaCurve<double> c(g);
    CHECK(gamma_apply(0.0, c) == 0.0);
    CHECK(gamma_apply(1.0, c) == 1.0);
    for (double x = 0.05; x < 1; x += 0.05) {
      CHECK(gamma_apply(x, c) == doctest::Approx(std::exp(g * std::log(x))).epsilon(1e-14));
      CHECK(gamma_apply(x, c) < x);  // mid-tones pulled down
    }
  }
}

TEST_CASE("sigmoid matches the logistic and keeps black above zero") {
  for (double g : kSigmoidGainPresets) {
    const SigmoidCurve<double> c(g, kSigmoidShiftPreset);
    CHECK(sigmoid_floor(c) > 0.0);
    CHECK(sigmoid_floor(c) == doctest::Approx(ref_sigmoid(0, g, 0.2)).epsilon(1e-14));
    CHECK(sigmoid_ceiling(c) < 1.0);
    for (double x = 0; x <= 1; x += 0.01) {
      CHECK(sigmoid_apply(x, c) == doctest::Approx(ref_sigmoid(x, g, 0.2)).epsilon(1e-13));
    }
    for (double y = 0.01; y < 0.99; y += 0.01) {
      const double p = std::clamp(y, sigmoid_floor(c), sigmoid_ceiling(c));
      const double expected = std::clamp(ref_sigmoid_inverse(p, g, 0.2), 0.0, 1.0);
      CHECK(sigmoid_invert(y, c) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  // large gains must not overflow
  const SigmoidCurve<double> steep(5000, 0.5);
  CHECK(sigmoid_apply(0.0, steep) == 0.0);
  CHECK(sigmoid_apply(1.0, steep) == 1.0);
  CHECK(std::isfinite(sigmoid_invert(0.3, steep)));
}

TEST_CASE("curves are monotone") {
  std::vector<ToneCurve> curves;
  for (double g : kGammaPresets) curves.emplace_back(GammaCurve<double>(g));
  for (double g : kSigmoidGainPresets) curves.emplace_back(SigmoidCurve<double>(g, 0.2));
  for (const ToneCurve& c : curves) {
    double prev_f = -1, prev_i = -1;
    for (int i = 0; i <= 2000; ++i) {
      const double x = i / 2000.0;
      const double f = curve_apply(x, c);
      const double inv = curve_invert(x, c);
      CHECK(f >= prev_f);
      CHECK(inv >= prev_i);
      prev_f = f;
      prev_i = inv;
    }
  }
}

TEST_CASE("forward after inverse is the identity on the achievable range") {
  for (double g : kGammaPresets) {
    const ToneCurve c = GammaCurve<double>(g);
    for (int i = 0; i < 10000; ++i) {
      const double y = i / 9999.0;
      CHECK(std::abs(curve_apply(curve_invert(y, c), c) - y) <= 1e-9);
    }
  }
  for (double g : kSigmoidGainPresets) {
    const SigmoidCurve<double> s(g, 0.2);
    const ToneCurve c = s;
    const double lo = sigmoid_floor(s), hi = sigmoid_ceiling(s);
    for (int i = 0; i < 10000; ++i) {
      const double y = lo + (hi - lo) * i / 9999.0;
      CHECK(std::abs(curve_apply(curve_invert(y, c), c) - y) <= 1e-9);
    }
    // outside the range the inverse saturates; the logit of a ceiling this
    // close to 1 only keeps about 8 digits in double
    CHECK(sigmoid_invert(0.0, s) == 0.0);
    CHECK(sigmoid_invert(1.0, s) == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("inverse after forward: double precision limit and extended precision") {
  for (double g : kGammaPresets) {
    CHECK(worst_inverse_forward<double>(ToneCurve(GammaCurve<double>(g)), 10000) <= 1e-9);
  }
  // A steep sigmoid is nearly flat near white, so double cannot invert it to
  // 1e-9 there; below that shoulder it can.
  const BasicToneCurve<double> steep = SigmoidCurve<double>(30, 0.2);
  CHECK(worst_inverse_forward<double>(steep, 10000, 0.8) <= 1e-9);
  CHECK(worst_inverse_forward<double>(steep, 10000, 1.0) > 1e-9);
  for (double g : kSigmoidGainPresets) {
    const BasicToneCurve<long double> c = SigmoidCurve<long double>(g, 0.2L);
    CHECK(static_cast<double>(worst_inverse_forward<long double>(c, 10000)) <= 1e-9);
  }
}

TEST_CASE("image-level application is pointwise") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  Plane<double> v(8, 8);
  for (Index i = 0; i < v.size(); ++i) v(i) = u(rng);
  const Image img(v);
  const ToneCurve c = SigmoidCurve<double>(20, 0.2);
  const Image out = apply_curve(img, c);
  const Image back = apply_inverse(out, c);
  for (Index i = 0; i < v.size(); ++i) {
    CHECK(out.values()(i) == curve_apply(v(i), c));
    CHECK(back.values()(i) == doctest::Approx(v(i)).epsilon(1e-6));
  }
}

TEST_CASE("residual contrast of the probe") {
  CHECK(residual_contrast(ToneCurve(GammaCurve<double>(1.0))) == doctest::Approx(0.5));
  for (double g : kGammaPresets) {
    const double c = residual_contrast(ToneCurve(GammaCurve<double>(g)));
    const double hi = std::pow(0.75, g), lo = std::pow(0.25, g);
    CHECK(c == doctest::Approx((hi - lo) / (hi + lo)));
  }
  CHECK(describe(ToneCurve(SigmoidCurve<double>(30, 0.2))).find("sigmoid") != std::string::npos);
}
