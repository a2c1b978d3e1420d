#pragma once

#include <vector>

#include "polargs/correction/correction.h"
#include "polargs/splat/render.h"

namespace polargs {

// One supervising view: the observed s0/2 image plus its correction targets.
struct RefineView {
  CameraModel cam;
  FloatImage target;
  CrmSet crm;
  ReflectiveMasks masks;
};

struct RefineConfig {
  int steps = 200;
  double lr = 0.05;  // initial line-search step
  double lambda_ref = 1.0;
  double lambda_dssim = 0.2;
  RenderOptions render;
};

struct RefineResult {
  GaussianCloud cloud;
  std::vector<double> loss_trace;  // steps + 1 entries, starting with the initial loss
  size_t flagged = 0;
};

// Sets `reflective` on Gaussians contributing (alpha >= 1/255) to a specular or
// overexposed pixel of any view; returns the number flagged.
size_t FlagReflectiveGaussians(GaussianCloud* cloud, const std::vector<RefineView>& views,
                               const RenderOptions& options = {});

// Sum over views of loss_color with the geometry (and therefore the per-pixel
// contributor order) frozen at the current cloud. Gradients w.r.t. each
// Gaussian's color (3 values) and opacity (1 value, not the logit) are written
// to grad_color / grad_opacity when given.
class ColorObjective {
 public:
  ColorObjective(const GaussianCloud& cloud, const std::vector<RefineView>& views,
                 const RefineConfig& cfg);

  double Evaluate(const GaussianCloud& cloud, std::vector<Eigen::Vector3d>* grad_color = nullptr,
                  std::vector<double>* grad_opacity = nullptr) const;

 private:
  const std::vector<RefineView>& views_;
  RefineConfig cfg_;
  std::vector<FragmentBuffer> fragments_;
  std::vector<DoubleImage> targets_;
};

// Projected, preconditioned gradient descent with backtracking on the color
// and opacity of flagged Gaussians. The loss trace never increases.
RefineResult RefineReflectiveColors(const GaussianCloud& cloud,
                                    const std::vector<RefineView>& views,
                                    const RefineConfig& cfg);

}  // namespace polargs
