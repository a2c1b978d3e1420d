#include "polargs/splat/gaussian.h"

#include <algorithm>
#include <cmath>

#include "polargs/core/error.h"

namespace polargs {

void Gaussian::set_opacity(double o) {
  POLARGS_CHECK(o > 0.0 && o < 1.0, ErrorKind::kDomain, "gaussian: opacity outside (0, 1)");
  opacity_logit = std::log(o / (1.0 - o));
}

Eigen::Matrix3d Gaussian::Covariance() const {
  const Eigen::Matrix3d r = quat.normalized().toRotationMatrix();
  const Eigen::Vector3d s = scale();
  return r * s.cwiseProduct(s).asDiagonal() * r.transpose();
}

Eigen::Vector3d Gaussian::MinAxis() const {
  int k = 0;
  log_scale.minCoeff(&k);
  return quat.normalized().toRotationMatrix().col(k);
}

ProjectedGaussian ProjectGaussian(const Gaussian& g, const CameraModel& cam, double dilation) {
  ProjectedGaussian out;
  const Eigen::Matrix3d w = cam.rotation();
  const Eigen::Vector3d t = w * g.mu + cam.translation();
  if (!(t.z() > kNearPlane)) return out;
  Eigen::Matrix<double, 2, 3> j;
  j << cam.fx / t.z(), 0.0, -cam.fx * t.x() / (t.z() * t.z()),
      0.0, cam.fy / t.z(), -cam.fy * t.y() / (t.z() * t.z());
  const Eigen::Matrix<double, 2, 3> m = j * w;
  out.cov = m * g.Covariance() * m.transpose();
  out.cov(0, 1) = out.cov(1, 0) = 0.5 * (out.cov(0, 1) + out.cov(1, 0));
  out.cov += dilation * Eigen::Matrix2d::Identity();
  out.mean = Eigen::Vector2d(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);
  out.depth = t.z();
  out.visible = out.cov.determinant() > 0.0;
  return out;
}

Eigen::Quaterniond QuaternionAligningZ(const Eigen::Vector3d& n) {
  return Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), n.normalized());
}

}  // namespace polargs
