#include "polargs/splat/losses.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polargs {

double LossColor(const DoubleImage& render, const DoubleImage& target, const CrmSet& crm,
                 const ReflectiveMasks& masks, double lambda_ref, double lambda_dssim,
                 DoubleImage* grad) {
  POLARGS_CHECK(render.SameShape(target), ErrorKind::kDimension,
                "loss_color: render and target sizes differ");
  if (grad) *grad = DoubleImage(render.width(), render.height(), render.channels());
  double loss = MaskedPhotometricLoss(render, target, masks.non_reflective, lambda_dssim, grad);
  if (lambda_ref == 0.0) return loss;
  const DoubleImage i_diff = crm.i_diff.Cast<double>();
  const DoubleImage i_chro = crm.i_chro.Cast<double>();
  loss += lambda_ref * MaskedPhotometricLoss(render, i_diff,
                                             ValidTargetMask(masks.specular, crm.prop_valid),
                                             lambda_dssim, grad, lambda_ref);
  loss += lambda_ref * MaskedPhotometricLoss(render, i_chro,
                                             ValidTargetMask(masks.overexposed, crm.prop_valid),
                                             lambda_dssim, grad, lambda_ref);
  return loss;
}

double LossColor(const FloatImage& render, const FloatImage& target, const CrmSet& crm,
                 const ReflectiveMasks& masks, double lambda_ref, double lambda_dssim) {
  return LossColor(render.Cast<double>(), target.Cast<double>(), crm, masks, lambda_ref,
                   lambda_dssim);
}

double LossNormal(const FloatImage& normal, const FloatImage& n_opt, const Mask& valid) {
  POLARGS_CHECK(normal.SameShape(n_opt) && (valid.empty() || valid.SameSize(normal)),
                ErrorKind::kDimension, "loss_normal: size mismatch");
  double sum = 0.0;
  size_t count = 0;
  for (int y = 0; y < normal.height(); ++y) {
    for (int x = 0; x < normal.width(); ++x) {
      if (!valid.empty() && !valid.at(x, y)) continue;
      for (int c = 0; c < normal.channels(); ++c) {
        sum += std::abs(static_cast<double>(normal.at(x, y, c)) - n_opt.at(x, y, c));
      }
      ++count;
    }
  }
  return count ? sum / count : 0.0;
}

bool DepthGradientNormal(const FloatImage& depth, const CameraModel& cam, int x, int y,
                         Eigen::Vector3d* n) {
  if (x + 1 >= depth.width() || y + 1 >= depth.height()) return false;
  const double d0 = depth.at(x, y), dx = depth.at(x + 1, y), dy = depth.at(x, y + 1);
  if (!(d0 > 0.0 && dx > 0.0 && dy > 0.0)) return false;
  const Eigen::Vector3d p = BackprojectToCamera(cam, {double(x), double(y)}, d0);
  const Eigen::Vector3d px = BackprojectToCamera(cam, {double(x + 1), double(y)}, dx);
  const Eigen::Vector3d py = BackprojectToCamera(cam, {double(x), double(y + 1)}, dy);
  Eigen::Vector3d c = (px - p).cross(py - p);
  const double len = c.norm();
  if (!(len > 0.0)) return false;
  c /= len;
  if (c.dot(p) > 0.0) c = -c;
  *n = CamToView(c);
  return true;
}

double LossDepthNormal(const FloatImage& depth, const FloatImage& normal,
                       const FloatImage& weights, const CameraModel& cam) {
  POLARGS_CHECK(depth.SameSize(normal) && depth.SameSize(weights), ErrorKind::kDimension,
                "loss_depth_normal: size mismatch");
  double sum = 0.0, wsum = 0.0;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const double w = weights.at(x, y);
      if (!(w > 0.0)) continue;
      Eigen::Vector3d nd;
      if (!DepthGradientNormal(depth, cam, x, y, &nd)) continue;
      const Eigen::Vector3d n(normal.at(x, y, 0), normal.at(x, y, 1), normal.at(x, y, 2));
      sum += w * (1.0 - nd.dot(n));
      wsum += w;
    }
  }
  return wsum > 0.0 ? sum / wsum : 0.0;
}

double LossScale(const GaussianCloud& cloud) {
  if (cloud.empty()) return 0.0;
  double sum = 0.0;
  for (const Gaussian& g : cloud.gaussians) sum += g.scale().minCoeff();
  return sum / cloud.size();
}

double TotalLoss(const LossParts& parts, const LossWeights& weights, int step) {
  const double gate = step >= weights.depth_normal_start ? 1.0 : 0.0;
  return parts.color + weights.alpha * parts.normal +
         weights.beta * parts.depth_normal * gate + weights.gamma * parts.scale;
}

}  // namespace polargs
