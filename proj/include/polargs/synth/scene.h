#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "polargs/core/camera.h"
#include "polargs/core/image.h"
#include "polargs/core/stokes.h"

namespace polargs::synth {

enum class ShapeKind { kSphere, kPlane, kSupershape };

ShapeKind ShapeFromName(const std::string& name);  // throws kConfig
std::string ShapeName(ShapeKind kind);

// Superellipsoid |x/a|^(2/e2) + |y/b|^(2/e2))^(e2/e1) + |z/c|^(2/e1) = 1.
struct SupershapeParams {
  double a = 1.0, b = 1.0, c = 1.0;
  double e1 = 0.6, e2 = 0.6;
};

struct SpecularModel {
  double strength = 0.0;   // peak radiance of the white Phong lobe
  double shininess = 40.0;
};

struct DolpModel {
  double diffuse_max = 0.2;
  double specular_max = 0.95;
  double overexposed = 0.05;  // DoLP written into clipped pixels
};

struct SceneSpec {
  ShapeKind shape = ShapeKind::kSphere;
  double radius = 1.0;             // sphere
  double extent = 2.0;             // plane side length, plane z = 0
  SupershapeParams supershape;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d albedo{0.6, 0.4, 0.25};
  bool textured = false;
  double texture_amplitude = 0.6;
  double texture_frequency = 12.0;
  double ambient = 0.15;
  double light_intensity = 1.0;
  SpecularModel specular;
  Eigen::Vector3d light_dir{0.3, -0.4, 0.866};  // towards the light, world frame
  DolpModel dolp_model;
  uint64_t rng_seed = 1;

  void Validate() const;  // throws kConfig
};

struct CameraIntrinsics {
  int width = 128;
  int height = 128;
  double fx = 160.0;
  double fy = 160.0;
};

// n cameras evenly spaced in azimuth about the world z axis, all looking at
// `look_at`. Throws kConfig when n < 2 or radius <= 0.
std::vector<CameraModel> MakeCameraRing(int n, double radius, double elevation,
                                        const Eigen::Vector3d& look_at,
                                        const CameraIntrinsics& intrinsics = {});

// n cameras on a Fibonacci spiral over the full sphere of directions, all
// looking at `look_at`. Throws kConfig when n < 2 or radius <= 0.
std::vector<CameraModel> MakeCameraSphere(int n, double radius, const Eigen::Vector3d& look_at,
                                          const CameraIntrinsics& intrinsics = {});

// Camera at `position` looking at `look_at`, world up = +z.
CameraModel LookAtCamera(const Eigen::Vector3d& position,
                         const Eigen::Vector3d& look_at,
                         const CameraIntrinsics& intrinsics);

struct SurfaceHit {
  double t = 0.0;
  Eigen::Vector3d point;
  Eigen::Vector3d normal;  // outward unit normal, world frame
};

// First intersection of the ray origin + t * dir (t > 0) with the shape.
bool IntersectShape(const SceneSpec& scene, const Eigen::Vector3d& origin,
                    const Eigen::Vector3d& dir, SurfaceHit* hit);

// Outward unit normal from the analytic implicit gradient at a surface point.
Eigen::Vector3d ShapeGradientNormal(const SceneSpec& scene, const Eigen::Vector3d& p);

Eigen::Vector3d AlbedoAt(const SceneSpec& scene, const Eigen::Vector3d& p);

// Uniform-by-area samples on the analytic surface (sphere and plane exactly,
// supershape on a fine parametric triangulation).
std::vector<Eigen::Vector3d> SampleSurface(const SceneSpec& scene, int n, uint64_t seed);

struct RenderedView {
  PolarizedCapture capture;
  FloatImage gt_depth;      // 0 on background
  FloatImage gt_normal;     // view frame, 3 channels
  FloatImage gt_azimuth;    // radians in [0, 2 pi)
  FloatImage gt_diffuse;    // diffuse radiance, 3 channels
  Mask foreground;
  Mask specular_mask;
  Mask overexposed_mask;
  Mask reflect_specular;    // 1 where the polarized light is specular-dominant
};

RenderedView RenderView(const SceneSpec& scene, const CameraModel& cam, int view_id = 0);

// Multiplies valid depths by (1 + u), u ~ U(-noise_rel, noise_rel), and zeroes
// exactly round(hole_fraction * n_valid) valid pixels. Deterministic in seed.
FloatImage CorruptDepth(const FloatImage& depth, double noise_rel,
                        double hole_fraction, uint64_t seed);

// Rotates each non-zero normal by an angle uniform in [0, max_angle] about a
// random axis perpendicular to it.
FloatImage CorruptNormals(const FloatImage& normals, double max_angle, uint64_t seed);

}  // namespace polargs::synth
