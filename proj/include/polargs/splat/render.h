#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "polargs/core/image.h"
#include "polargs/splat/gaussian.h"

namespace polargs {

inline constexpr double kAlphaMax = 0.99;
inline constexpr double kAlphaMin = 1.0 / 255.0;
inline constexpr double kTransmittanceMin = 1e-4;

struct RenderOptions {
  double dilation = kDefaultDilation;
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  // Depth of a contributor is where the pixel ray meets the Gaussian's
  // tangent plane; false uses the centre depth.
  bool planar_depth = true;
};

struct SplatRender {
  FloatImage color;   // H x W x 3
  FloatImage depth;   // sum T a d / sum T a, 0 where nothing contributes
  FloatImage normal;  // view frame, normalized where alpha > 0
  FloatImage alpha;   // sum T a
};

// Front-to-back contributors of one pixel: Gaussian index and its footprint
// value exp(-0.5 d^T S^-1 d). Every Gaussian whose footprint reaches
// kAlphaMin is recorded, independent of opacity and early termination.
struct Fragment {
  uint32_t gaussian;
  double weight;
};

struct FragmentBuffer {
  int width = 0;
  int height = 0;
  std::vector<uint32_t> offsets;  // pixel_count + 1 entries
  std::vector<Fragment> fragments;

  std::span<const Fragment> at(int x, int y) const {
    const size_t p = static_cast<size_t>(y) * width + x;
    return {fragments.data() + offsets[p], fragments.data() + offsets[p + 1]};
  }
};

// Depth order with ties broken on the parameter bits, so results do not
// depend on storage order.
std::vector<uint32_t> CanonicalOrder(const GaussianCloud& cloud, const CameraModel& cam);

SplatRender Render(const GaussianCloud& cloud, const CameraModel& cam,
                   const RenderOptions& options = {}, FragmentBuffer* fragments = nullptr);

// Alpha composite of one pixel's fragments (front-to-back, with the standard alpha
// clip, skip threshold and early termination). `weight_sum` receives sum T a.
Eigen::Vector3d CompositeColor(std::span<const Fragment> frags, const GaussianCloud& cloud,
                               const Eigen::Vector3d& background, double* weight_sum = nullptr);

}  // namespace polargs
