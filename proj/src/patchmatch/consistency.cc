#include <algorithm>
#include <cmath>
#include <limits>

#include "polargs/core/parallel.h"
#include "polargs/patchmatch/patchmatch.h"

namespace polargs {
namespace {

// Bilinear depth lookup; every corner with non-zero weight must hold a depth.
bool SampleDepth(const FloatImage& depth, double u, double v, double* out) {
  if (!(u >= 0.0 && v >= 0.0 && u <= depth.width() - 1 && v <= depth.height() - 1)) return false;
  const int x0 = static_cast<int>(u), y0 = static_cast<int>(v);
  const double fx = u - x0, fy = v - y0;
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    const int dx = k & 1, dy = k >> 1;
    const double wt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
    if (wt == 0.0) continue;
    const double d = depth.at(std::min(x0 + dx, depth.width() - 1),
                              std::min(y0 + dy, depth.height() - 1));
    if (!(d > 0.0)) return false;
    sum += wt * d;
  }
  *out = sum;
  return true;
}

// Relative depth tolerance used to decide whether a source view sees a point.
constexpr double kVisibilityRel = 0.05;

}  // namespace

Mask GeometricCheck(const FloatImage& ref_depth, const CameraModel& ref_cam,
                    const std::vector<FloatImage>& src_depths,
                    const std::vector<CameraModel>& src_cams, const PmConfig& cfg) {
  POLARGS_CHECK(src_depths.size() == src_cams.size(), ErrorKind::kDimension,
                "geometric_check: one depth map per source camera required");
  const int w = ref_depth.width(), h = ref_depth.height();
  Mask valid(w, h, 1);
  const int needed = std::min<int>(cfg.min_consistent_views, static_cast<int>(src_cams.size()));
  ParallelFor(0, h, [&](int64_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      const double d = ref_depth.at(x, y);
      if (!(d > 0.0)) continue;
      const Eigen::Vector3d world = BackprojectPixel(ref_cam, {double(x), double(y)}, d);
      int consistent = 0;
      for (size_t k = 0; k < src_cams.size(); ++k) {
        const CameraModel& src = src_cams[k];
        const Eigen::Vector3d pc = src.WorldToCam(world);
        if (!(pc.z() > 0.0)) continue;
        const double u = src.fx * pc.x() / pc.z() + src.cx;
        const double v = src.fy * pc.y() / pc.z() + src.cy;
        double ds;
        if (!SampleDepth(src_depths[k], u, v, &ds)) continue;
        const Eigen::Vector3d back = ref_cam.WorldToCam(BackprojectPixel(src, {u, v}, ds));
        if (!(back.z() > 0.0)) continue;
        const double bx = ref_cam.fx * back.x() / back.z() + ref_cam.cx;
        const double by = ref_cam.fy * back.y() / back.z() + ref_cam.cy;
        const double err = std::hypot(bx - x, by - y);
        const double rel = std::abs(ds - pc.z()) / pc.z();
        if (err <= cfg.geo_px_thresh && rel <= cfg.geo_depth_rel_thresh) ++consistent;
      }
      valid.at(x, y) = needed == 0 || consistent >= needed;
    }
  });
  return valid;
}

double PolarimetricResidual(const Eigen::Vector3d& n_ref_cam, const Eigen::Matrix3d& r_src_to_ref,
                            double aolp) {
  const double u = n_ref_cam.dot(r_src_to_ref.col(0));
  const double v = n_ref_cam.dot(r_src_to_ref.col(1));
  double best = std::numeric_limits<double>::infinity();
  for (double phi : AolpCandidates(aolp)) {
    // Pseudo-tangent residual of this branch; a quarter-turn swaps it with
    // the tangent residual.
    best = std::min(best, std::abs(u * std::cos(phi) - v * std::sin(phi)));
  }
  return best;
}

double PolarimetricError(int x, int y, double depth, const Eigen::Vector3d& n_view,
                         const PolarView& ref, const std::vector<PolarView>& sources,
                         const PmConfig&) {
  const Eigen::Vector3d n_cam = ViewToCam(n_view).normalized();
  double sum = 0.0;
  int count = 0;
  if (ref.polar->valid.at(x, y)) {
    sum += PolarimetricResidual(n_cam, Eigen::Matrix3d::Identity(), ref.polar->aolp.at(x, y));
    ++count;
  }
  const Eigen::Vector3d world =
      ref.cam->CamToWorld(BackprojectToCamera(*ref.cam, {double(x), double(y)}, depth));
  const Eigen::Matrix3d r_ref = ref.cam->rotation();
  for (const PolarView& src : sources) {
    const Eigen::Vector3d pc = src.cam->WorldToCam(world);
    if (!(pc.z() > 0.0)) continue;
    const int u = static_cast<int>(std::lround(src.cam->fx * pc.x() / pc.z() + src.cam->cx));
    const int v = static_cast<int>(std::lround(src.cam->fy * pc.y() / pc.z() + src.cam->cy));
    if (!src.polar->valid.InBounds(u, v) || !src.polar->valid.at(u, v)) continue;
    if (src.depth) {
      const double ds = src.depth->at(u, v);
      if (!(ds > 0.0) || std::abs(ds - pc.z()) > kVisibilityRel * pc.z()) continue;
    }
    const Eigen::Matrix3d r_src_to_ref = r_ref * src.cam->rotation().transpose();
    // Skip views that see the back of the surface.
    if ((r_src_to_ref.transpose() * n_cam).dot(pc) > 0.0) continue;
    sum += PolarimetricResidual(n_cam, r_src_to_ref, src.polar->aolp.at(u, v));
    ++count;
  }
  return count ? sum / count : -1.0;
}

Mask PolarimetricCheck(const FloatImage& depth, const FloatImage& normal, const PolarView& ref,
                       const std::vector<PolarView>& sources, const PmConfig& cfg) {
  POLARGS_CHECK(depth.SameSize(normal) && ref.polar->aolp.SameSize(depth), ErrorKind::kDimension,
                "polarimetric_check: size mismatch");
  const int w = depth.width(), h = depth.height();
  Mask valid(w, h, 1);
  ParallelFor(0, h, [&](int64_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      const double d = depth.at(x, y);
      const Eigen::Vector3d n(normal.at(x, y, 0), normal.at(x, y, 1), normal.at(x, y, 2));
      if (!(d > 0.0) || !(n.norm() > 1e-12)) continue;
      const double err = PolarimetricError(x, y, d, n, ref, sources, cfg);
      valid.at(x, y) = err < 0.0 || err <= cfg.polar_eps_thresh;
    }
  });
  return valid;
}

}  // namespace polargs
