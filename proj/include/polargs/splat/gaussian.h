#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "polargs/core/camera.h"

namespace polargs {

// Anisotropic 3D Gaussian with DC color. Scale is stored as log, opacity as
// logit, so both stay in their valid ranges under unconstrained updates.
struct Gaussian {
  Eigen::Vector3d mu = Eigen::Vector3d::Zero();
  Eigen::Quaterniond quat = Eigen::Quaterniond::Identity();
  Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
  double opacity_logit = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Constant(0.5);
  bool reflective = false;

  Eigen::Vector3d scale() const { return log_scale.array().exp(); }
  void set_scale(const Eigen::Vector3d& s) { log_scale = s.array().log(); }
  double opacity() const { return 1.0 / (1.0 + std::exp(-opacity_logit)); }
  void set_opacity(double o);  // o in (0, 1)

  Eigen::Matrix3d Covariance() const;  // R S S^T R^T
  // Rotated axis of the smallest scale (world frame, unit).
  Eigen::Vector3d MinAxis() const;
};

struct GaussianCloud {
  std::vector<Gaussian> gaussians;
  double scene_scale = 1.0;

  size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }
};

struct ProjectedGaussian {
  bool visible = false;  // false when the centre is not in front of the camera
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  double depth = 0.0;
};

inline constexpr double kDefaultDilation = 0.3;
inline constexpr double kNearPlane = 1e-2;

// EWA projection: cov2d = J W Sigma W^T J^T + dilation * I.
ProjectedGaussian ProjectGaussian(const Gaussian& g, const CameraModel& cam,
                                  double dilation = kDefaultDilation);

// Quaternion whose rotation maps the local z axis onto `n`.
Eigen::Quaterniond QuaternionAligningZ(const Eigen::Vector3d& n);

// Binary little-endian PLY with properties x y z qw qx qy qz sx sy sz (log)
// opacity (logit) red green blue reflective.
void WriteCloudPly(const std::filesystem::path& path, const GaussianCloud& cloud);
GaussianCloud ReadCloudPly(const std::filesystem::path& path);

}  // namespace polargs
