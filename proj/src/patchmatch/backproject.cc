#include <cmath>
#include <set>
#include <tuple>

#include "polargs/patchmatch/patchmatch.h"

namespace polargs {

std::vector<Gaussian> BackprojectToGaussians(const FloatImage& depth, const FloatImage& normal,
                                             const Mask& valid, const FloatImage& color,
                                             const CameraModel& cam, double voxel) {
  POLARGS_CHECK(depth.SameSize(normal) && depth.SameSize(valid) && depth.SameSize(color),
                ErrorKind::kDimension, "backproject_to_gaussians: size mismatch");
  std::vector<Gaussian> out;
  std::set<std::tuple<int64_t, int64_t, int64_t>> occupied;
  const Eigen::Matrix3d r_t = cam.rotation().transpose();
  const double f = 0.5 * (cam.fx + cam.fy);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const double d = depth.at(x, y);
      if (!valid.at(x, y) || !(d > 0.0)) continue;
      Eigen::Vector3d n(normal.at(x, y, 0), normal.at(x, y, 1), normal.at(x, y, 2));
      if (!(n.norm() > 1e-12)) continue;
      Gaussian g;
      g.mu = BackprojectPixel(cam, {double(x), double(y)}, d);
      if (voxel > 0.0) {
        const auto key = std::make_tuple(static_cast<int64_t>(std::floor(g.mu.x() / voxel)),
                                         static_cast<int64_t>(std::floor(g.mu.y() / voxel)),
                                         static_cast<int64_t>(std::floor(g.mu.z() / voxel)));
        if (!occupied.insert(key).second) continue;
      }
      g.quat = QuaternionAligningZ(r_t * ViewToCam(n.normalized()));
      const double s = d * std::sqrt(2.0) / f;
      g.set_scale({s, s, s / 10.0});
      g.set_opacity(0.5);
      const int nc = color.channels();
      for (int c = 0; c < 3; ++c) g.color[c] = color.at(x, y, std::min(c, nc - 1));
      g.color = g.color.cwiseMax(0.0).cwiseMin(1.0);
      out.push_back(g);
    }
  }
  return out;
}

}  // namespace polargs
