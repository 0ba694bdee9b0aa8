#pragma once

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "provisim/image.hpp"

namespace provisim {

/// Radial low-pass with a cosine taper placed beyond the cutoff: flat up to
/// `cutoff_cycles`, raised-cosine roll-off to `cutoff_cycles * (1 + taper)`,
/// zero past that. Frequencies are in cycles per image.
template <typename Scalar>
struct SpectralFilter {
  Scalar cutoff_cycles;
  Scalar taper;

  SpectralFilter(Scalar cutoff, Scalar taper_fraction)
      : cutoff_cycles(cutoff), taper(taper_fraction) {
    if (!(cutoff > 0)) {
      throw Error(ErrorCode::kInvalidArgument, "cutoff must be positive");
    }
    if (!(taper_fraction >= 0 && taper_fraction <= 1)) {
      throw Error(ErrorCode::kInvalidArgument, "taper must lie in [0,1]");
    }
  }

  Scalar stop_radius() const { return cutoff_cycles * (Scalar(1) + taper); }
};

inline constexpr double kDefaultTaper = 0.3;

template <typename Scalar>
Scalar tukey_weight(Scalar r, const SpectralFilter<Scalar>& f) {
  const Scalar R = f.cutoff_cycles;
  if (r <= R) return Scalar(1);
  if (f.taper == 0 || r > f.stop_radius()) return Scalar(0);
  const Scalar t = (r - R) / (f.taper * R);
  return Scalar(0.5) * (Scalar(1) + std::cos(std::numbers::pi_v<Scalar> * t));
}

/// Implant geometry expressed as a sampling limit. Two implant pixels make one
/// cycle, so the cutoff is half the number of pixels across the field.
struct ImplantPreset {
  double pixel_pitch_um;
  double implant_width_um;

  double grid_extent() const { return implant_width_um / pixel_pitch_um; }
  double cutoff_cycles() const { return grid_extent() / 2.0; }

  template <typename Scalar = double>
  SpectralFilter<Scalar> filter(Scalar taper = Scalar(kDefaultTaper)) const {
    return SpectralFilter<Scalar>(static_cast<Scalar>(cutoff_cycles()), taper);
  }
};

inline constexpr double kPrimaWidthUm = 2000.0;

inline ImplantPreset preset_from_pitch(double pixel_pitch_um,
                                       double implant_width_um = kPrimaWidthUm) {
  if (!(implant_width_um > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "implant width must be positive");
  }
  if (!(pixel_pitch_um > 0) || pixel_pitch_um > implant_width_um) {
    throw Error(ErrorCode::kInvalidArgument,
                "pixel pitch must lie in (0, implant width], got " + std::to_string(pixel_pitch_um));
  }
  return ImplantPreset{pixel_pitch_um, implant_width_um};
}

// 20/20 vision resolves 30 cycles/degree and one degree spans 288 um of retina,
// so the equivalent pixel is 288 / 30 / 2 = 4.8 um.
inline constexpr double kNormalVisionPitchUm = 4.8;

/// Snellen denominator (20/x) for an implant of the given pitch.
inline double snellen_equivalent(double pixel_pitch_um) {
  return 20.0 * pixel_pitch_um / kNormalVisionPitchUm;
}

/// Signed frequency of DFT bin `k` of an `n`-point transform, in cycles per
/// image (k for k <= n/2, k - n above).
inline double signed_frequency(Index k, Index n) {
  return static_cast<double>(k <= n / 2 ? k : k - n);
}

/// Mask in natural DFT bin order (rows = height). Radial frequency is
/// sqrt(u^2 + v^2) with u, v in cycles per image along each axis.
template <typename Scalar>
Plane<Scalar> frequency_mask(Index width, Index height, const SpectralFilter<Scalar>& f) {
  Plane<Scalar> mask(height, width);
  for (Index ky = 0; ky < height; ++ky) {
    const Scalar v = static_cast<Scalar>(signed_frequency(ky, height));
    for (Index kx = 0; kx < width; ++kx) {
      const Scalar u = static_cast<Scalar>(signed_frequency(kx, width));
      mask(ky, kx) = tukey_weight(std::hypot(u, v), f);
    }
  }
  return mask;
}

template <typename Scalar>
using Spectrum = Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Unnormalised forward 2-D DFT (rows then columns).
template <typename Scalar>
Spectrum<Scalar> dft2(const Plane<Scalar>& values) {
  using Complex = std::complex<Scalar>;
  const Index h = values.rows();
  const Index w = values.cols();
  Spectrum<Scalar> out = values.template cast<Complex>();
  Eigen::FFT<Scalar> fft;
  std::vector<Complex> in_buf, out_buf;
  in_buf.resize(static_cast<std::size_t>(w));
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) in_buf[static_cast<std::size_t>(x)] = out(y, x);
    fft.fwd(out_buf, in_buf);
    for (Index x = 0; x < w; ++x) out(y, x) = out_buf[static_cast<std::size_t>(x)];
  }
  in_buf.resize(static_cast<std::size_t>(h));
  for (Index x = 0; x < w; ++x) {
    for (Index y = 0; y < h; ++y) in_buf[static_cast<std::size_t>(y)] = out(y, x);
    fft.fwd(out_buf, in_buf);
    for (Index y = 0; y < h; ++y) out(y, x) = out_buf[static_cast<std::size_t>(y)];
  }
  return out;
}

/// Inverse of `dft2` (scaled by 1 / (w h)); returns the real part.
template <typename Scalar>
Plane<Scalar> idft2_real(Spectrum<Scalar> spectrum) {
  using Complex = std::complex<Scalar>;
  const Index h = spectrum.rows();
  const Index w = spectrum.cols();
  Eigen::FFT<Scalar> fft;
  std::vector<Complex> in_buf, out_buf;
  in_buf.resize(static_cast<std::size_t>(h));
  for (Index x = 0; x < w; ++x) {
    for (Index y = 0; y < h; ++y) in_buf[static_cast<std::size_t>(y)] = spectrum(y, x);
    fft.inv(out_buf, in_buf);
    for (Index y = 0; y < h; ++y) spectrum(y, x) = out_buf[static_cast<std::size_t>(y)];
  }
  in_buf.resize(static_cast<std::size_t>(w));
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) in_buf[static_cast<std::size_t>(x)] = spectrum(y, x);
    fft.inv(out_buf, in_buf);
    for (Index x = 0; x < w; ++x) spectrum(y, x) = out_buf[static_cast<std::size_t>(x)];
  }
  return spectrum.real();
}

/// Multiplies the spectrum of `values` by `mask` and transforms back. No
/// clamping, so the result is linear in `values`.
template <typename Scalar>
Plane<Scalar> apply_frequency_mask(const Plane<Scalar>& values, const Plane<Scalar>& mask) {
  if (mask.rows() != values.rows() || mask.cols() != values.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "mask extent does not match image");
  }
  Spectrum<Scalar> spectrum = dft2(values);
  spectrum *= mask.template cast<std::complex<Scalar>>();
  return idft2_real<Scalar>(std::move(spectrum));
}

/// Low-pass filtered image, clamped to [0,1]. Ringing near sharp edges is
/// left in place.
template <typename Scalar>
BasicImage<Scalar> lowpass(const BasicImage<Scalar>& img, const SpectralFilter<Scalar>& f) {
  const Plane<Scalar> mask = frequency_mask(img.width(), img.height(), f);
  return BasicImage<Scalar>(apply_frequency_mask(img.values(), mask));
}

}  // namespace provisim
