#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "harness.h"
#include "polargs/core/stokes.h"
#include "polargs/patchmatch/patchmatch.h"
#include "polargs/synth/scene.h"

namespace polargs::acceptance {

namespace {

std::string Format(const char* fmt, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c, d);
  return buf;
}

}  // namespace

Outcome StokesRoundTrip() {
  constexpr int kSide = 256;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  DoubleImage phi(kSide, kSide, 1), rho(kSide, kSide, 1);
  std::array<DoubleImage, 4> angles;
  for (auto& a : angles) a = DoubleImage(kSide, kSide, 3);
  for (int y = 0; y < kSide; ++y) {
    for (int x = 0; x < kSide; ++x) {
      const double p = std::numbers::pi * u01(rng);
      const double r = 1.0 - u01(rng);  // (0, 1]
      const double s0 = 0.2 + 1.8 * u01(rng);
      phi.at(x, y) = p;
      rho.at(x, y) = r;
      for (int k = 0; k < 4; ++k) {
        const double analyzer = kAnalyzerAnglesDeg[k] * std::numbers::pi / 180.0;
        const double i = 0.5 * s0 * (1.0 + r * std::cos(2.0 * (analyzer - p)));
        for (int c = 0; c < 3; ++c) angles[k].at(x, y, c) = i;
      }
    }
  }
  const auto maps = AolpDolp(StokesFromAngles(angles));
  double max_dphi = 0.0, max_drho = 0.0;
  for (int y = 0; y < kSide; ++y) {
    for (int x = 0; x < kSide; ++x) {
      const double d = std::abs(WrapDifference(2.0 * (maps.aolp.at(x, y) - phi.at(x, y)))) / 2.0;
      max_dphi = std::max(max_dphi, d);
      max_drho = std::max(max_drho, std::abs(maps.dolp.at(x, y) - rho.at(x, y)));
    }
  }
  return {max_dphi < 1e-6 && max_drho < 1e-9,
          Format("max |dphi| = %.3g rad (< 1e-6), max |drho| = %.3g (< 1e-9)", max_dphi,
                 max_drho)};
}

Outcome AmbiguityResolution() {
  synth::SceneSpec scene;
  scene.specular.strength = 0.9;
  scene.specular.shininess = 12.0;
  scene.dolp_model.diffuse_max = 0.2;
  scene.dolp_model.specular_max = 0.95;
  synth::CameraIntrinsics intr{256, 256, 320.0, 320.0};
  const auto cams = synth::MakeCameraRing(4, 3.0, 0.5, Eigen::Vector3d::Zero(), intr);
  const PmConfig cfg;
  size_t total = 0, correct = 0;
  for (size_t v = 0; v < cams.size(); ++v) {
    const synth::RenderedView view = synth::RenderView(scene, cams[v], static_cast<int>(v));
    const PolarMaps polar = AolpDolp(StokesFromAngles(view.capture));
    // Rendered normals of a trained cloud are close to, not equal to, the truth.
    const FloatImage hyp = synth::CorruptNormals(view.gt_normal, 5.0 * std::numbers::pi / 180.0,
                                                 100 + v);
    for (int y = 0; y < intr.height; ++y) {
      for (int x = 0; x < intr.width; ++x) {
        if (!view.foreground.at(x, y) || !polar.valid.at(x, y)) continue;
        const double r = polar.dolp.at(x, y);
        if (!(r >= 0.9 || r <= 0.1)) continue;
        const Eigen::Vector3d n(hyp.at(x, y, 0), hyp.at(x, y, 1), hyp.at(x, y, 2));
        const AzimuthScore s = ScoreAzimuth(
            n, {polar.aolp.at(x, y), polar.dolp.at(x, y), true}, cfg);
        ++total;
        correct += std::abs(WrapDifference(s.azimuth - view.gt_azimuth.at(x, y))) < 1e-3;
      }
    }
  }
  const double rate = total ? static_cast<double>(correct) / total : 0.0;
  return {total > 0 && rate >= 0.95,
          Format("branch match %.4f over %.0f pixels (>= 0.95)", rate, double(total))};
}

}  // namespace polargs::acceptance
