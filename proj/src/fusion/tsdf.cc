#include <cmath>

#include "polargs/core/error.h"
#include "polargs/core/parallel.h"
#include "polargs/fusion/tsdf.h"
#include "polargs/simd/kernels.h"

namespace polargs {

void TsdfConfig::Validate() const {
  POLARGS_CHECK(voxel_size > 0 && truncation > 0 && max_depth > 0, ErrorKind::kConfig,
                "tsdf: voxel_size, truncation and max_depth must be positive");
  POLARGS_CHECK(truncation >= voxel_size, ErrorKind::kConfig,
                "tsdf: truncation must be at least one voxel");
}

TsdfVolume::TsdfVolume(const Eigen::Vector3d& origin, int nx, int ny, int nz,
                       const TsdfConfig& cfg)
    : origin_(origin), nx_(nx), ny_(ny), nz_(nz), cfg_(cfg) {
  cfg.Validate();
  POLARGS_CHECK(nx > 1 && ny > 1 && nz > 1, ErrorKind::kDimension,
                "tsdf: grid needs at least two points per axis");
  const size_t n = static_cast<size_t>(nx) * ny * nz;
  POLARGS_CHECK(n <= (size_t{1} << 31), ErrorKind::kConfig,
                "tsdf: grid too large, increase voxel_size");
  tsdf_.assign(n, 1.0f);
  weight_.assign(n, 0.0f);
}

TsdfVolume TsdfVolume::FromBounds(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                                  double margin, const TsdfConfig& cfg) {
  cfg.Validate();
  POLARGS_CHECK((hi - lo).minCoeff() >= 0.0 && margin >= 0.0, ErrorKind::kDomain,
                "tsdf: empty bounds");
  const Eigen::Vector3d origin = lo - Eigen::Vector3d::Constant(margin);
  const Eigen::Vector3d extent = hi - lo + Eigen::Vector3d::Constant(2.0 * margin);
  int dims[3];
  for (int a = 0; a < 3; ++a) {
    dims[a] = static_cast<int>(std::ceil(extent[a] / cfg.voxel_size)) + 1;
    if (dims[a] < 2) dims[a] = 2;
  }
  return TsdfVolume(origin, dims[0], dims[1], dims[2], cfg);
}

void TsdfVolume::Integrate(const FloatImage& depth, const CameraModel& cam) {
  POLARGS_CHECK(depth.channels() == 1 && depth.width() > 0, ErrorKind::kDimension,
                "tsdf: depth map must be single channel");
  const Eigen::Matrix3d r = cam.rotation();
  const Eigen::Vector3d dp = r * Eigen::Vector3d(cfg_.voxel_size, 0.0, 0.0);
  ParallelFor(0, static_cast<int64_t>(ny_) * nz_, [&](int64_t row) {
    const int j = static_cast<int>(row % ny_), k = static_cast<int>(row / ny_);
    const Eigen::Vector3d p0 = cam.WorldToCam(Point(0, j, k));
    simd::TsdfRowArgs a;
    a.n = static_cast<size_t>(nx_);
    for (int c = 0; c < 3; ++c) {
      a.p0[c] = static_cast<float>(p0[c]);
      a.dp[c] = static_cast<float>(dp[c]);
    }
    a.fx = static_cast<float>(cam.fx);
    a.fy = static_cast<float>(cam.fy);
    a.cx = static_cast<float>(cam.cx);
    a.cy = static_cast<float>(cam.cy);
    a.width = depth.width();
    a.height = depth.height();
    a.depth = depth.data();
    a.truncation = static_cast<float>(cfg_.truncation);
    a.max_depth = static_cast<float>(cfg_.max_depth);
    a.tsdf = tsdf_.data() + index(0, j, k);
    a.weight = weight_.data() + index(0, j, k);
    simd::TsdfRow(a);
  });
}

}  // namespace polargs
