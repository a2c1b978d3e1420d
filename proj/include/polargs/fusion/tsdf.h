#pragma once

#include <vector>

#include <Eigen/Core>

#include "polargs/core/camera.h"
#include "polargs/core/image.h"

namespace polargs {

struct TsdfConfig {
  double voxel_size = 0.008;
  double truncation = 0.04;
  double max_depth = 10.0;

  void Validate() const;  // throws kConfig
};

// Dense truncated signed distance grid. Grid point (i, j, k) sits at
// origin + voxel_size * (i, j, k); values are sdf / truncation in [-1, 1],
// positive in front of the surface.
class TsdfVolume {
 public:
  TsdfVolume() = default;
  TsdfVolume(const Eigen::Vector3d& origin, int nx, int ny, int nz, const TsdfConfig& cfg);

  // Covers [lo, hi] grown by `margin` on every side.
  static TsdfVolume FromBounds(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
                               double margin, const TsdfConfig& cfg);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  const Eigen::Vector3d& origin() const { return origin_; }
  const TsdfConfig& config() const { return cfg_; }
  size_t index(int i, int j, int k) const {
    return (static_cast<size_t>(k) * ny_ + j) * nx_ + i;
  }
  Eigen::Vector3d Point(int i, int j, int k) const {
    return origin_ + cfg_.voxel_size * Eigen::Vector3d(i, j, k);
  }

  std::vector<float>& tsdf() { return tsdf_; }
  const std::vector<float>& tsdf() const { return tsdf_; }
  std::vector<float>& weight() { return weight_; }
  const std::vector<float>& weight() const { return weight_; }

  // Projective update with one depth map (0 = missing). Voxels more than one
  // truncation band behind the observed surface are left untouched.
  void Integrate(const FloatImage& depth, const CameraModel& cam);

 private:
  Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
  int nx_ = 0, ny_ = 0, nz_ = 0;
  TsdfConfig cfg_;
  std::vector<float> tsdf_;
  std::vector<float> weight_;
};

}  // namespace polargs
