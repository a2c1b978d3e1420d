#include "polargs/core/stokes.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <type_traits>

#include "polargs/simd/kernels.h"

namespace polargs {

double WrapHalfTurn(double a) {
  double r = std::fmod(a, std::numbers::pi);
  if (r < 0.0) r += std::numbers::pi;
  if (r >= std::numbers::pi) r -= std::numbers::pi;
  return r;
}

double WrapFullTurn(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

double WrapDifference(double a) {
  double r = WrapFullTurn(a);
  if (r > std::numbers::pi) r -= 2.0 * std::numbers::pi;
  return r;
}

AngleSample AolpDolpFromStokes(double s0, double s1, double s2) {
  AngleSample out;
  if (!(s0 >= kDarkThreshold)) return out;
  const double rho = std::min(1.0, std::sqrt(s1 * s1 + s2 * s2) / s0);
  out.dolp = rho;
  if (rho < kMinDolpForAngle) return out;
  out.aolp = WrapHalfTurn(0.5 * std::atan2(s2, s1));
  out.valid = true;
  return out;
}

template <typename T>
BasicStokesImage<T> StokesFromAngles(const std::array<Image<T>, 4>& images) {
  for (int k = 1; k < 4; ++k) {
    POLARGS_CHECK(images[k].SameShape(images[0]), ErrorKind::kDimension,
                  "stokes_from_angles: angle images differ in size");
  }
  for (const auto& img : images) {
    for (T v : img.samples()) {
      POLARGS_CHECK(!std::isnan(static_cast<double>(v)), ErrorKind::kData,
                    "stokes_from_angles: NaN intensity");
    }
  }
  const Image<T>& ref = images[0];
  BasicStokesImage<T> out{Image<T>(ref.width(), ref.height(), ref.channels()),
                          Image<T>(ref.width(), ref.height(), ref.channels()),
                          Image<T>(ref.width(), ref.height(), ref.channels())};
  simd::StokesArgs args{ref.size(),         images[0].data(), images[1].data(),
                        images[2].data(),   images[3].data(), out.s0.data(),
                        out.s1.data(),      out.s2.data()};
  if constexpr (std::is_same_v<T, float>) {
    simd::StokesF32(args);
  } else {
    simd::StokesF64(args);
  }
  return out;
}

template <typename T>
BasicPolarMaps<T> AolpDolp(const BasicStokesImage<T>& stokes) {
  const int w = stokes.s0.width();
  const int h = stokes.s0.height();
  const int c = stokes.s0.channels();
  BasicPolarMaps<T> maps{Image<T>(w, h, 1), Image<T>(w, h, 1), Mask(w, h, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double l0 = 0.0, l1 = 0.0, l2 = 0.0;
      for (int k = 0; k < c; ++k) {
        l0 += stokes.s0.at(x, y, k);
        l1 += stokes.s1.at(x, y, k);
        l2 += stokes.s2.at(x, y, k);
      }
      const AngleSample s = AolpDolpFromStokes(l0 / c, l1 / c, l2 / c);
      maps.aolp.at(x, y) = static_cast<T>(s.aolp);
      maps.dolp.at(x, y) = static_cast<T>(s.dolp);
      maps.valid.at(x, y) = s.valid ? 1 : 0;
    }
  }
  return maps;
}

template <typename T>
Image<T> IntensityImage(const BasicStokesImage<T>& stokes) {
  Image<T> out(stokes.s0.width(), stokes.s0.height(), stokes.s0.channels());
  const T* s0 = stokes.s0.data();
  T* dst = out.data();
  for (size_t i = 0; i < out.size(); ++i) {
    dst[i] = std::clamp<T>(s0[i] / T(2), T(0), T(1));
  }
  return out;
}

template <typename T>
std::array<Image<T>, 4> RenderAngles(const BasicStokesImage<T>& stokes) {
  const Image<T>& s0 = stokes.s0;
  std::array<Image<T>, 4> out;
  for (auto& img : out) img = Image<T>(s0.width(), s0.height(), s0.channels());
  for (size_t i = 0; i < s0.size(); ++i) {
    const T a = s0.data()[i];
    const T b = stokes.s1.data()[i];
    const T c = stokes.s2.data()[i];
    out[0].data()[i] = (a + b) / T(2);
    out[1].data()[i] = (a + c) / T(2);
    out[2].data()[i] = (a - b) / T(2);
    out[3].data()[i] = (a - c) / T(2);
  }
  return out;
}

template BasicStokesImage<float> StokesFromAngles(const std::array<Image<float>, 4>&);
template BasicStokesImage<double> StokesFromAngles(const std::array<Image<double>, 4>&);
template BasicPolarMaps<float> AolpDolp(const BasicStokesImage<float>&);
template BasicPolarMaps<double> AolpDolp(const BasicStokesImage<double>&);
template Image<float> IntensityImage(const BasicStokesImage<float>&);
template Image<double> IntensityImage(const BasicStokesImage<double>&);
template std::array<Image<float>, 4> RenderAngles(const BasicStokesImage<float>&);
template std::array<Image<double>, 4> RenderAngles(const BasicStokesImage<double>&);

}  // namespace polargs
