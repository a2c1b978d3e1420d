#pragma once

#include <array>

#include "polargs/core/camera.h"
#include "polargs/core/image.h"

namespace polargs {

// Analyzer angles of the four capture images, in degrees.
inline constexpr std::array<double, 4> kAnalyzerAnglesDeg = {0.0, 45.0, 90.0, 135.0};

// Below this s0 (normalized units) a pixel is too dark for a meaningful AoLP.
inline constexpr double kDarkThreshold = 1e-4;
// Below this DoLP the polarization angle is undefined.
inline constexpr double kMinDolpForAngle = 1e-6;

// Four linear-intensity images (H x W x 3) at 0/45/90/135 degrees.
template <typename T>
struct BasicCapture {
  int view_id = 0;
  std::array<Image<T>, 4> images;
  CameraModel camera;
};
using PolarizedCapture = BasicCapture<float>;

template <typename T>
struct BasicStokesImage {
  Image<T> s0, s1, s2;
};
using StokesImage = BasicStokesImage<float>;

// Single-channel maps computed from the channel-averaged Stokes vector.
template <typename T>
struct BasicPolarMaps {
  Image<T> aolp;  // radians in [0, pi)
  Image<T> dolp;  // [0, 1]
  Mask valid;     // false for dark or unpolarized pixels
};
using PolarMaps = BasicPolarMaps<float>;

struct AngleSample {
  double aolp = 0.0;
  double dolp = 0.0;
  bool valid = false;
};

// AoLP / DoLP of one Stokes triple.
AngleSample AolpDolpFromStokes(double s0, double s1, double s2);

// Wraps an angle into [0, pi).
double WrapHalfTurn(double a);
// Wraps an angle into [0, 2 pi).
double WrapFullTurn(double a);
// Wraps an angle difference into (-pi, pi].
double WrapDifference(double a);

// Malus-law intensity seen through an analyzer at `angle` radians.
inline double MalusIntensity(double s0, double s1, double s2, double angle) {
  return 0.5 * (s0 + s1 * std::cos(2.0 * angle) + s2 * std::sin(2.0 * angle));
}

// s0 = I0 + I90, s1 = I0 - I90, s2 = I45 - I135 per channel, followed by the
// physical clamp. Throws kDimension on size mismatch and kData on NaN.
template <typename T>
BasicStokesImage<T> StokesFromAngles(const std::array<Image<T>, 4>& images);

template <typename T>
BasicStokesImage<T> StokesFromAngles(const BasicCapture<T>& capture) {
  return StokesFromAngles(capture.images);
}

template <typename T>
BasicPolarMaps<T> AolpDolp(const BasicStokesImage<T>& stokes);

// s0 / 2 per channel, clamped to [0, 1].
template <typename T>
Image<T> IntensityImage(const BasicStokesImage<T>& stokes);

// Inverse of StokesFromAngles: renders the four analyzer images.
template <typename T>
std::array<Image<T>, 4> RenderAngles(const BasicStokesImage<T>& stokes);

}  // namespace polargs
