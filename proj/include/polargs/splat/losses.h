#pragma once

#include "polargs/core/camera.h"
#include "polargs/core/image.h"
#include "polargs/correction/correction.h"
#include "polargs/splat/gaussian.h"

namespace polargs {

// L_non over the non-reflective mask plus lambda_ref * L_ref. When `grad` is
// given it receives dL/d(render).
double LossColor(const DoubleImage& render, const DoubleImage& target, const CrmSet& crm,
                 const ReflectiveMasks& masks, double lambda_ref, double lambda_dssim,
                 DoubleImage* grad = nullptr);
double LossColor(const FloatImage& render, const FloatImage& target, const CrmSet& crm,
                 const ReflectiveMasks& masks, double lambda_ref, double lambda_dssim);

// Mean over valid pixels of the L1 norm |N - N_opt|_1. Pixels count as valid
// where `valid` is set (or everywhere when it is empty).
double LossNormal(const FloatImage& normal, const FloatImage& n_opt, const Mask& valid = {});

// Unit normal of the surface through the back-projected depths at (x, y),
// (x+1, y), (x, y+1), in the view frame. False on borders or missing depth.
bool DepthGradientNormal(const FloatImage& depth, const CameraModel& cam, int x, int y,
                         Eigen::Vector3d* n);

// sum_p w_p (1 - n_D(p) . N(p)) / sum_p w_p with n_D from DepthGradientNormal.
double LossDepthNormal(const FloatImage& depth, const FloatImage& normal,
                       const FloatImage& weights, const CameraModel& cam);

// Mean over Gaussians of the smallest scale.
double LossScale(const GaussianCloud& cloud);

struct LossParts {
  double color = 0.0;
  double normal = 0.0;
  double depth_normal = 0.0;
  double scale = 0.0;
};

struct LossWeights {
  double alpha = 0.1;
  double beta = 0.05;
  double gamma = 50.0;
  int depth_normal_start = 7000;
};

double TotalLoss(const LossParts& parts, const LossWeights& weights, int step);

}  // namespace polargs
