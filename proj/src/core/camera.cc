#include "polargs/core/camera.h"

#include "polargs/core/error.h"

namespace polargs {

void CameraModel::Validate() const {
  POLARGS_CHECK(fx > 0 && fy > 0, ErrorKind::kDomain,
                "camera: focal lengths must be positive");
  POLARGS_CHECK(width > 0 && height > 0, ErrorKind::kDomain,
                "camera: image size must be positive");
  const Eigen::Matrix3d r = rotation();
  const double dev =
      (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  POLARGS_CHECK(dev < 1e-6, ErrorKind::kDomain,
                "camera: rotation block is not orthonormal");
}

Projection ProjectPoint(const CameraModel& cam, const Eigen::Vector3d& world) {
  const Eigen::Vector3d p = cam.WorldToCam(world);
  POLARGS_CHECK(p.z() > 0.0, ErrorKind::kDomain,
                "project_point: point is behind the camera");
  Projection out;
  out.pixel = {(p.x() * cam.fx + cam.cx * p.z()) / p.z(),
               (p.y() * cam.fy + cam.cy * p.z()) / p.z()};
  out.depth = p.z();
  return out;
}

Eigen::Vector3d BackprojectToCamera(const CameraModel& cam,
                                    const Eigen::Vector2d& pixel,
                                    double depth) {
  POLARGS_CHECK(depth > 0.0, ErrorKind::kDomain,
                "backproject_pixel: depth must be positive");
  return {(pixel.x() - cam.cx) * depth / cam.fx,
          (pixel.y() - cam.cy) * depth / cam.fy, depth};
}

Eigen::Vector3d BackprojectPixel(const CameraModel& cam,
                                 const Eigen::Vector2d& pixel, double depth) {
  return cam.CamToWorld(BackprojectToCamera(cam, pixel, depth));
}

Eigen::Matrix4d RelativePose(const CameraModel& ref, const CameraModel& src) {
  return src.world_to_cam * ref.world_to_cam.inverse();
}

}  // namespace polargs
