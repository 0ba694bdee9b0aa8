#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "provisim/error.hpp"

namespace provisim {

// Row-major so that plane.data() walks the raster in scanline order.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

namespace detail {

inline void check_extent(Index width, Index height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "image extent must be at least 1x1, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

template <typename Derived>
auto clamp_unit(const Eigen::ArrayBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  return values.max(Scalar(0)).min(Scalar(1));
}

}  // namespace detail

/// Single-channel luminance raster with every sample in [0,1].
///
/// Indexing is (x, y) with x along the width. The backing plane is stored with
/// rows = height so `values()` can be fed straight into Eigen expressions.
template <typename Scalar>
class BasicImage {
 public:
  using PlaneType = Plane<Scalar>;

  BasicImage(Index width, Index height, Scalar fill = Scalar(0)) {
    detail::check_extent(width, height);
    values_ = PlaneType::Constant(height, width, std::clamp(fill, Scalar(0), Scalar(1)));
  }

  /// Adopts `values` (rows = height), clamping into [0,1]. NaN maps to 0.
  explicit BasicImage(const PlaneType& values) {
    detail::check_extent(values.cols(), values.rows());
    values_ = detail::clamp_unit(values.isNaN().select(Scalar(0), values));
  }

  Index width() const { return values_.cols(); }
  Index height() const { return values_.rows(); }
  Index size() const { return values_.size(); }

  Scalar operator()(Index x, Index y) const { return values_(y, x); }
  void set(Index x, Index y, Scalar v) { values_(y, x) = std::clamp(v, Scalar(0), Scalar(1)); }

  const PlaneType& values() const { return values_; }
  std::span<const Scalar> data() const {
    return {values_.data(), static_cast<std::size_t>(values_.size())};
  }

  Scalar mean() const { return values_.mean(); }

  template <typename Other>
  BasicImage<Other> cast() const {
    return BasicImage<Other>(values_.template cast<Other>().eval());
  }

  friend bool operator==(const BasicImage& a, const BasicImage& b) {
    return a.width() == b.width() && a.height() == b.height() && (a.values_ == b.values_).all();
  }

 private:
  PlaneType values_;
};

/// Three-channel raster stored as separate planes, each channel in [0,1].
template <typename Scalar>
class BasicColorImage {
 public:
  using PlaneType = Plane<Scalar>;

  BasicColorImage(Index width, Index height, Scalar r = 0, Scalar g = 0, Scalar b = 0) {
    detail::check_extent(width, height);
    red_ = PlaneType::Constant(height, width, std::clamp(r, Scalar(0), Scalar(1)));
    green_ = PlaneType::Constant(height, width, std::clamp(g, Scalar(0), Scalar(1)));
    blue_ = PlaneType::Constant(height, width, std::clamp(b, Scalar(0), Scalar(1)));
  }

  BasicColorImage(const PlaneType& r, const PlaneType& g, const PlaneType& b) {
    detail::check_extent(r.cols(), r.rows());
    if (g.rows() != r.rows() || g.cols() != r.cols() || b.rows() != r.rows() ||
        b.cols() != r.cols()) {
      throw Error(ErrorCode::kInvalidArgument, "color planes differ in extent");
    }
    red_ = detail::clamp_unit(r.isNaN().select(Scalar(0), r));
    green_ = detail::clamp_unit(g.isNaN().select(Scalar(0), g));
    blue_ = detail::clamp_unit(b.isNaN().select(Scalar(0), b));
  }

  /// Grey triple r = g = b = v at every sample.
  static BasicColorImage from_gray(const BasicImage<Scalar>& img) {
    return BasicColorImage(img.values(), img.values(), img.values());
  }

  Index width() const { return red_.cols(); }
  Index height() const { return red_.rows(); }

  const PlaneType& red() const { return red_; }
  const PlaneType& green() const { return green_; }
  const PlaneType& blue() const { return blue_; }

 private:
  PlaneType red_, green_, blue_;
};

using Image = BasicImage<double>;
using ColorImage = BasicColorImage<double>;

// Rec. 709 luma weights.
template <typename Scalar>
inline constexpr Scalar kLumaRed = Scalar(0.2126);
template <typename Scalar>
inline constexpr Scalar kLumaGreen = Scalar(0.7152);
template <typename Scalar>
inline constexpr Scalar kLumaBlue = Scalar(0.0722);

// The weights sum to one, so luma is written relative to green: grey triples
// come back bit-exact.
template <typename Scalar>
BasicImage<Scalar> to_grayscale(const BasicColorImage<Scalar>& img) {
  Plane<Scalar> luma = img.green() + kLumaRed<Scalar> * (img.red() - img.green()) +
                       kLumaBlue<Scalar> * (img.blue() - img.green());
  return BasicImage<Scalar>(luma);
}

/// Nearest of `n_levels` evenly spaced values in [0,1]; exact ties go up.
template <typename Scalar>
Scalar quantize_value(Scalar v, int n_levels) {
  const Scalar steps = Scalar(n_levels - 1);
  return std::floor(v * steps + Scalar(0.5)) / steps;
}

template <typename Scalar>
BasicImage<Scalar> quantize_levels(const BasicImage<Scalar>& img, int n_levels) {
  if (n_levels < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "quantize_levels needs at least 2 levels, got " + std::to_string(n_levels));
  }
  Plane<Scalar> out =
      img.values().unaryExpr([n_levels](Scalar v) { return quantize_value(v, n_levels); });
  return BasicImage<Scalar>(out);
}

/// Pointwise map; the result is clamped back into [0,1].
template <typename Scalar, typename F>
BasicImage<Scalar> map_values(const BasicImage<Scalar>& img, F&& f) {
  Plane<Scalar> out = img.values().unaryExpr(std::forward<F>(f));
  return BasicImage<Scalar>(out);
}

}  // namespace provisim
