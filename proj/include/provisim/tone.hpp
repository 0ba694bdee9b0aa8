#pragma once

#include <array>
#include <cmath>
#include <string>
#include <variant>

#include "provisim/image.hpp"

namespace provisim {

/// y = x^gamma. Keeps black and white fixed and pulls mid-tones toward black
/// (gamma > 1), i.e. a more uniformly grey percept.
template <typename Scalar>
struct GammaCurve {
  Scalar gamma;

  explicit GammaCurve(Scalar g) : gamma(g) {
    if (!(g > 0) || !std::isfinite(static_cast<double>(g))) {
      throw Error(ErrorCode::kInvalidArgument, "gamma must be positive and finite");
    }
  }

  friend bool operator==(const GammaCurve&, const GammaCurve&) = default;
};

/// y = 1 / (1 + exp(-gain (x - shift))), not rescaled: black is lifted to
/// sigma(-gain * shift) and white stops short of 1.
template <typename Scalar>
struct SigmoidCurve {
  Scalar gain;
  Scalar shift;

  SigmoidCurve(Scalar g, Scalar s) : gain(g), shift(s) {
    if (!(g > 0) || !std::isfinite(static_cast<double>(g))) {
      throw Error(ErrorCode::kInvalidArgument, "sigmoid gain must be positive and finite");
    }
    if (!(s >= 0 && s <= 1)) {
      throw Error(ErrorCode::kInvalidArgument, "sigmoid shift must lie in [0,1]");
    }
  }

  friend bool operator==(const SigmoidCurve&, const SigmoidCurve&) = default;
};

template <typename Scalar>
using BasicToneCurve = std::variant<GammaCurve<Scalar>, SigmoidCurve<Scalar>>;
using ToneCurve = BasicToneCurve<double>;

inline constexpr std::array<double, 3> kGammaPresets = {1.7, 2.6, 3.5};
inline constexpr std::array<double, 3> kSigmoidGainPresets = {10.0, 20.0, 30.0};
inline constexpr double kSigmoidShiftPreset = 0.2;

namespace detail {

template <typename Scalar>
Scalar clamp01(Scalar v) {
  return std::clamp(v, Scalar(0), Scalar(1));
}

// Branches keep exp() from overflowing for large |t|.
template <typename Scalar>
Scalar logistic(Scalar t) {
  if (t >= 0) return Scalar(1) / (Scalar(1) + std::exp(-t));
  const Scalar e = std::exp(t);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
Scalar logit(Scalar p) {
  return std::log(p) - std::log1p(-p);
}

}  // namespace detail

template <typename Scalar>
Scalar gamma_apply(Scalar v, const GammaCurve<Scalar>& c) {
  return std::pow(detail::clamp01(v), c.gamma);
}

template <typename Scalar>
Scalar gamma_invert(Scalar v, const GammaCurve<Scalar>& c) {
  return std::pow(detail::clamp01(v), Scalar(1) / c.gamma);
}

template <typename Scalar>
Scalar sigmoid_floor(const SigmoidCurve<Scalar>& c) {
  return detail::logistic(-c.gain * c.shift);
}

template <typename Scalar>
Scalar sigmoid_ceiling(const SigmoidCurve<Scalar>& c) {
  return detail::logistic(c.gain * (Scalar(1) - c.shift));
}

template <typename Scalar>
Scalar sigmoid_apply(Scalar v, const SigmoidCurve<Scalar>& c) {
  return detail::logistic(c.gain * (detail::clamp01(v) - c.shift));
}

/// Total: `v` is first clamped to the achievable output range, and the result
/// to [0,1].
template <typename Scalar>
Scalar sigmoid_invert(Scalar v, const SigmoidCurve<Scalar>& c) {
  if (std::isnan(static_cast<double>(v))) v = Scalar(0);
  const Scalar p = std::clamp(v, sigmoid_floor(c), sigmoid_ceiling(c));
  return detail::clamp01(c.shift + detail::logit(p) / c.gain);
}

template <typename Scalar>
Scalar curve_apply(Scalar v, const BasicToneCurve<Scalar>& curve) {
  return std::visit(
      [v](const auto& c) -> Scalar {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, GammaCurve<Scalar>>) {
          return gamma_apply(v, c);
        } else {
          return sigmoid_apply(v, c);
        }
      },
      curve);
}

template <typename Scalar>
Scalar curve_invert(Scalar v, const BasicToneCurve<Scalar>& curve) {
  return std::visit(
      [v](const auto& c) -> Scalar {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, GammaCurve<Scalar>>) {
          return gamma_invert(v, c);
        } else {
          return sigmoid_invert(v, c);
        }
      },
      curve);
}

template <typename Scalar>
BasicImage<Scalar> apply_curve(const BasicImage<Scalar>& img, const BasicToneCurve<Scalar>& curve) {
  return map_values(img, [&curve](Scalar v) { return curve_apply(v, curve); });
}

template <typename Scalar>
BasicImage<Scalar> apply_inverse(const BasicImage<Scalar>& img,
                                 const BasicToneCurve<Scalar>& curve) {
  return map_values(img, [&curve](Scalar v) { return curve_invert(v, curve); });
}

/// Two-level probe around a mid-grey: levels mean - amplitude and
/// mean + amplitude.
struct ContrastProbe {
  double mean = 0.5;
  double amplitude = 0.25;
};

/// Michelson contrast of the probe after the curve. Informational only; it is
/// one of several reasonable ways to summarise how much contrast a curve keeps.
template <typename Scalar>
Scalar residual_contrast(const BasicToneCurve<Scalar>& curve, const ContrastProbe& probe = {}) {
  const Scalar hi = curve_apply(static_cast<Scalar>(probe.mean + probe.amplitude), curve);
  const Scalar lo = curve_apply(static_cast<Scalar>(probe.mean - probe.amplitude), curve);
  if (hi + lo == 0) return Scalar(0);
  return (hi - lo) / (hi + lo);
}

std::string describe(const ToneCurve& curve);

}  // namespace provisim
