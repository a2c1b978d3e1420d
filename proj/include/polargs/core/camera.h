#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace polargs {

// Pinhole camera. The camera frame is x right, y down, z forward; a pixel
// centre has integer coordinates.
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  Eigen::Matrix4d world_to_cam = Eigen::Matrix4d::Identity();

  Eigen::Matrix3d rotation() const { return world_to_cam.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return world_to_cam.topRightCorner<3, 1>(); }
  Eigen::Vector3d center() const { return -rotation().transpose() * translation(); }

  Eigen::Vector3d WorldToCam(const Eigen::Vector3d& x) const {
    return rotation() * x + translation();
  }
  Eigen::Vector3d CamToWorld(const Eigen::Vector3d& x) const {
    return rotation().transpose() * (x - translation());
  }

  // Throws kDomain unless intrinsics are positive and the rotation block is
  // orthonormal to 1e-6.
  void Validate() const;
};

struct Projection {
  Eigen::Vector2d pixel;
  double depth = 0.0;
};

// Throws kDomain for points with camera-frame Z <= 0.
Projection ProjectPoint(const CameraModel& cam, const Eigen::Vector3d& world);

// Camera-frame point for a pixel at the given depth (throws kDomain if
// depth <= 0).
Eigen::Vector3d BackprojectToCamera(const CameraModel& cam,
                                    const Eigen::Vector2d& pixel, double depth);
Eigen::Vector3d BackprojectPixel(const CameraModel& cam,
                                 const Eigen::Vector2d& pixel, double depth);

// Transform taking reference-camera coordinates to source-camera coordinates.
Eigen::Matrix4d RelativePose(const CameraModel& ref, const CameraModel& src);

// Normal maps use the view frame: x right, y up, z towards the viewer, so a
// surface facing the camera has n.z > 0. Azimuths are measured
// counter-clockwise from +x in this frame.
inline Eigen::Vector3d CamToView(const Eigen::Vector3d& n) {
  return {n.x(), -n.y(), -n.z()};
}
inline Eigen::Vector3d ViewToCam(const Eigen::Vector3d& n) {
  return {n.x(), -n.y(), -n.z()};
}

}  // namespace polargs
