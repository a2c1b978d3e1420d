#include "polargs/synth/scene.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "polargs/core/error.h"
#include "polargs/core/parallel.h"

namespace polargs::synth {
namespace {

constexpr double kPi = std::numbers::pi;

double SignedPow(double v, double e) {
  return std::copysign(std::pow(std::abs(v), e), v);
}

double SupershapeValue(const SupershapeParams& s, const Eigen::Vector3d& p) {
  const double x = std::pow(std::abs(p.x() / s.a), 2.0 / s.e2);
  const double y = std::pow(std::abs(p.y() / s.b), 2.0 / s.e2);
  const double z = std::pow(std::abs(p.z() / s.c), 2.0 / s.e1);
  return std::pow(x + y, s.e2 / s.e1) + z - 1.0;
}

double SupershapeBound(const SupershapeParams& s) {
  return std::sqrt(3.0) * std::max({s.a, s.b, s.c});
}

bool IntersectSphere(const Eigen::Vector3d& center, double radius,
                     const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                     double* t_near, double* t_far) {
  const Eigen::Vector3d oc = o - center;
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return false;
  const double s = std::sqrt(disc);
  *t_near = -b - s;
  *t_far = -b + s;
  return *t_far > 0.0;
}

}  // namespace

ShapeKind ShapeFromName(const std::string& name) {
  if (name == "sphere") return ShapeKind::kSphere;
  if (name == "plane") return ShapeKind::kPlane;
  if (name == "supershape") return ShapeKind::kSupershape;
  Throw(ErrorKind::kConfig, "unknown shape: " + name);
}

std::string ShapeName(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kSphere:
      return "sphere";
    case ShapeKind::kPlane:
      return "plane";
    case ShapeKind::kSupershape:
      return "supershape";
  }
  return "sphere";
}

void SceneSpec::Validate() const {
  POLARGS_CHECK(radius > 0 && extent > 0, ErrorKind::kConfig,
                "scene: shape parameters must be positive");
  POLARGS_CHECK(supershape.a > 0 && supershape.b > 0 && supershape.c > 0 &&
                    supershape.e1 > 0.1 && supershape.e2 > 0.1 &&
                    supershape.e1 <= 2.0 && supershape.e2 <= 2.0,
                ErrorKind::kConfig, "scene: supershape parameters out of range");
  POLARGS_CHECK(albedo.allFinite() && albedo.minCoeff() >= 0 && albedo.maxCoeff() <= 1,
                ErrorKind::kConfig, "scene: albedo must lie in [0, 1]");
  POLARGS_CHECK(specular.strength >= 0 && specular.strength <= 1 &&
                    specular.shininess > 0,
                ErrorKind::kConfig, "scene: invalid specular model");
  POLARGS_CHECK(dolp_model.diffuse_max >= 0 && dolp_model.diffuse_max <= 1 &&
                    dolp_model.specular_max >= 0 && dolp_model.specular_max <= 1 &&
                    dolp_model.overexposed >= 0 && dolp_model.overexposed < 0.1,
                ErrorKind::kConfig, "scene: invalid dolp model");
  POLARGS_CHECK(light_dir.norm() > 0, ErrorKind::kConfig, "scene: zero light direction");
}

CameraModel LookAtCamera(const Eigen::Vector3d& position,
                         const Eigen::Vector3d& look_at,
                         const CameraIntrinsics& in) {
  const Eigen::Vector3d forward = (look_at - position).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(forward.dot(up)) > 0.999) up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  CameraModel cam;
  cam.fx = in.fx;
  cam.fy = in.fy;
  cam.cx = (in.width - 1) / 2.0;
  cam.cy = (in.height - 1) / 2.0;
  cam.width = in.width;
  cam.height = in.height;
  cam.world_to_cam.setIdentity();
  cam.world_to_cam.topLeftCorner<3, 3>() = r;
  cam.world_to_cam.topRightCorner<3, 1>() = -r * position;
  return cam;
}

std::vector<CameraModel> MakeCameraRing(int n, double radius, double elevation,
                                        const Eigen::Vector3d& look_at,
                                        const CameraIntrinsics& intrinsics) {
  POLARGS_CHECK(n >= 2, ErrorKind::kConfig, "camera ring needs at least 2 views");
  POLARGS_CHECK(radius > 0, ErrorKind::kConfig, "camera ring radius must be positive");
  POLARGS_CHECK(std::abs(elevation) < 0.5 * kPi - 1e-3, ErrorKind::kConfig,
                "camera ring elevation must be below 90 degrees");
  std::vector<CameraModel> cams;
  cams.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double az = 2.0 * kPi * k / n;
    const Eigen::Vector3d pos =
        look_at + radius * Eigen::Vector3d(std::cos(elevation) * std::cos(az),
                                           std::cos(elevation) * std::sin(az),
                                           std::sin(elevation));
    cams.push_back(LookAtCamera(pos, look_at, intrinsics));
  }
  return cams;
}

std::vector<CameraModel> MakeCameraSphere(int n, double radius, const Eigen::Vector3d& look_at,
                                          const CameraIntrinsics& intrinsics) {
  POLARGS_CHECK(n >= 2, ErrorKind::kConfig, "camera sphere needs at least 2 views");
  POLARGS_CHECK(radius > 0, ErrorKind::kConfig, "camera sphere radius must be positive");
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<CameraModel> cams;
  cams.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / n;
    const double r = std::sqrt(1.0 - z * z);
    const double az = golden * k;
    const Eigen::Vector3d pos =
        look_at + radius * Eigen::Vector3d(r * std::cos(az), r * std::sin(az), z);
    cams.push_back(LookAtCamera(pos, look_at, intrinsics));
  }
  return cams;
}

bool IntersectShape(const SceneSpec& scene, const Eigen::Vector3d& origin,
                    const Eigen::Vector3d& dir, SurfaceHit* hit) {
  switch (scene.shape) {
    case ShapeKind::kSphere: {
      double t0, t1;
      if (!IntersectSphere(scene.center, scene.radius, origin, dir, &t0, &t1)) return false;
      const double t = t0 > 1e-9 ? t0 : t1;
      hit->t = t;
      hit->point = origin + t * dir;
      hit->normal = (hit->point - scene.center).normalized();
      return true;
    }
    case ShapeKind::kPlane: {
      if (std::abs(dir.z()) < 1e-12) return false;
      const double t = (scene.center.z() - origin.z()) / dir.z();
      if (t <= 1e-9) return false;
      const Eigen::Vector3d p = origin + t * dir;
      const double half = 0.5 * scene.extent;
      if (std::abs(p.x() - scene.center.x()) > half ||
          std::abs(p.y() - scene.center.y()) > half) {
        return false;
      }
      hit->t = t;
      hit->point = p;
      hit->normal = Eigen::Vector3d(0.0, 0.0, dir.z() < 0 ? 1.0 : -1.0);
      return true;
    }
    case ShapeKind::kSupershape: {
      const SupershapeParams& s = scene.supershape;
      double t0, t1;
      if (!IntersectSphere(scene.center, SupershapeBound(s), origin, dir, &t0, &t1)) {
        return false;
      }
      t0 = std::max(t0, 0.0);
      const int steps = 2000;
      const double dt = (t1 - t0) / steps;
      auto f = [&](double t) { return SupershapeValue(s, origin + t * dir - scene.center); };
      double prev_t = t0;
      double prev_f = f(t0);
      for (int i = 1; i <= steps; ++i) {
        const double t = t0 + i * dt;
        const double v = f(t);
        if (prev_f > 0.0 && v <= 0.0) {
          double lo = prev_t, hi = t;
          for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) lo = mid; else hi = mid;
          }
          hit->t = 0.5 * (lo + hi);
          hit->point = origin + hit->t * dir;
          hit->normal = ShapeGradientNormal(scene, hit->point);
          return true;
        }
        prev_t = t;
        prev_f = v;
      }
      return false;
    }
  }
  return false;
}

Eigen::Vector3d ShapeGradientNormal(const SceneSpec& scene, const Eigen::Vector3d& p) {
  const Eigen::Vector3d q = p - scene.center;
  switch (scene.shape) {
    case ShapeKind::kSphere:
      return q.normalized();
    case ShapeKind::kPlane:
      return Eigen::Vector3d::UnitZ();
    case ShapeKind::kSupershape: {
      const SupershapeParams& s = scene.supershape;
      const double ax = std::abs(q.x() / s.a), ay = std::abs(q.y() / s.b);
      const double px = std::pow(ax, 2.0 / s.e2), py = std::pow(ay, 2.0 / s.e2);
      const double sum = px + py;
      const double outer =
          sum > 0 ? (s.e2 / s.e1) * std::pow(sum, s.e2 / s.e1 - 1.0) : 0.0;
      auto dpow = [](double v, double e, double scale) {
        // d/dv |v/scale|^e
        const double a = std::abs(v / scale);
        if (a == 0.0) return 0.0;
        return std::copysign(e * std::pow(a, e - 1.0) / scale, v);
      };
      Eigen::Vector3d g(outer * dpow(q.x(), 2.0 / s.e2, s.a),
                        outer * dpow(q.y(), 2.0 / s.e2, s.b),
                        dpow(q.z(), 2.0 / s.e1, s.c));
      return g.normalized();
    }
  }
  return q.normalized();
}

Eigen::Vector3d AlbedoAt(const SceneSpec& scene, const Eigen::Vector3d& p) {
  if (!scene.textured) return scene.albedo;
  const double f = scene.texture_frequency;
  const auto phase = [&](int k) { return 2.0 * kPi * HashUniform(scene.rng_seed, 77, k); };
  const Eigen::Vector3d q = p - scene.center;
  const double t1 = std::sin(f * q.x() + phase(0)) * std::sin(f * q.y() + phase(1)) *
                    std::sin(f * q.z() + phase(2));
  const double t2 = std::sin(1.7 * f * (q.x() + q.y()) + phase(3)) *
                    std::sin(1.3 * f * (q.y() - q.z()) + phase(4));
  const double t3 = std::sin(2.9 * f * (q.z() + 0.5 * q.x()) + phase(5));
  const double tex = (0.5 * t1 + 0.3 * t2 + 0.2 * t3);
  Eigen::Vector3d a = scene.albedo * (1.0 + scene.texture_amplitude * tex);
  return a.cwiseMax(0.0).cwiseMin(1.0);
}

std::vector<Eigen::Vector3d> SampleSurface(const SceneSpec& scene, int n, uint64_t seed) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(n);
  switch (scene.shape) {
    case ShapeKind::kSphere:
      for (int i = 0; i < n; ++i) {
        const double z = 2.0 * HashUniform(seed, i, 0) - 1.0;
        const double phi = 2.0 * kPi * HashUniform(seed, i, 1);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        pts.push_back(scene.center +
                      scene.radius * Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z));
      }
      break;
    case ShapeKind::kPlane:
      for (int i = 0; i < n; ++i) {
        pts.push_back(scene.center +
                      scene.extent * Eigen::Vector3d(HashUniform(seed, i, 0) - 0.5,
                                                     HashUniform(seed, i, 1) - 0.5, 0.0));
      }
      break;
    case ShapeKind::kSupershape: {
      // Fine parametric triangulation, then area-weighted sampling.
      const SupershapeParams& s = scene.supershape;
      const int nu = 256, nv = 128;
      auto point = [&](int iu, int iv) {
        const double w = -kPi + 2.0 * kPi * iu / nu;
        const double e = -0.5 * kPi + kPi * iv / nv;
        const double ce = SignedPow(std::cos(e), s.e1);
        return Eigen::Vector3d(s.a * ce * SignedPow(std::cos(w), s.e2),
                               s.b * ce * SignedPow(std::sin(w), s.e2),
                               s.c * SignedPow(std::sin(e), s.e1));
      };
      std::vector<std::array<Eigen::Vector3d, 3>> tris;
      std::vector<double> cum;
      double total = 0.0;
      for (int iv = 0; iv < nv; ++iv) {
        for (int iu = 0; iu < nu; ++iu) {
          const Eigen::Vector3d p00 = point(iu, iv), p10 = point(iu + 1, iv),
                                p01 = point(iu, iv + 1), p11 = point(iu + 1, iv + 1);
          for (const auto& tri : {std::array<Eigen::Vector3d, 3>{p00, p10, p11},
                                  std::array<Eigen::Vector3d, 3>{p00, p11, p01}}) {
            const double area = 0.5 * (tri[1] - tri[0]).cross(tri[2] - tri[0]).norm();
            if (area <= 0.0) continue;
            total += area;
            tris.push_back(tri);
            cum.push_back(total);
          }
        }
      }
      for (int i = 0; i < n; ++i) {
        const double pick = HashUniform(seed, i, 0) * total;
        const size_t k = std::min<size_t>(
            std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin(), tris.size() - 1);
        double a = HashUniform(seed, i, 1), b = HashUniform(seed, i, 2);
        if (a + b > 1.0) {
          a = 1.0 - a;
          b = 1.0 - b;
        }
        const auto& t = tris[k];
        pts.push_back(scene.center + t[0] + a * (t[1] - t[0]) + b * (t[2] - t[0]));
      }
      break;
    }
  }
  return pts;
}

FloatImage CorruptDepth(const FloatImage& depth, double noise_rel,
                        double hole_fraction, uint64_t seed) {
  POLARGS_CHECK(noise_rel >= 0.0 && hole_fraction >= 0.0 && hole_fraction < 1.0,
                ErrorKind::kConfig, "corrupt_depth: invalid noise parameters");
  FloatImage out = depth;
  std::vector<std::pair<uint64_t, size_t>> order;
  for (size_t i = 0; i < out.size(); ++i) {
    const float d = out.data()[i];
    if (!(d > 0.0f)) continue;
    const double u = (2.0 * HashUniform(seed, i, 0) - 1.0) * noise_rel;
    out.data()[i] = static_cast<float>(d * (1.0 + u));
    order.emplace_back(HashKeys(seed, i, 1), i);
  }
  const size_t holes =
      static_cast<size_t>(std::llround(hole_fraction * static_cast<double>(order.size())));
  std::sort(order.begin(), order.end());
  for (size_t k = 0; k < holes; ++k) out.data()[order[k].second] = 0.0f;
  return out;
}

FloatImage CorruptNormals(const FloatImage& normals, double max_angle, uint64_t seed) {
  FloatImage out = normals;
  for (int y = 0; y < normals.height(); ++y) {
    for (int x = 0; x < normals.width(); ++x) {
      const float* p = normals.pixel(x, y);
      Eigen::Vector3d n(p[0], p[1], p[2]);
      if (n.squaredNorm() < 1e-12) continue;
      n.normalize();
      const size_t idx = static_cast<size_t>(y) * normals.width() + x;
      const double angle = max_angle * HashUniform(seed, idx, 0);
      const double spin = 2.0 * kPi * HashUniform(seed, idx, 1);
      Eigen::Vector3d t1 = n.unitOrthogonal();
      Eigen::Vector3d t2 = n.cross(t1);
      const Eigen::Vector3d axis = std::cos(spin) * t1 + std::sin(spin) * t2;
      const Eigen::Vector3d r = Eigen::AngleAxisd(angle, axis) * n;
      float* q = out.pixel(x, y);
      q[0] = static_cast<float>(r.x());
      q[1] = static_cast<float>(r.y());
      q[2] = static_cast<float>(r.z());
    }
  }
  return out;
}

}  // namespace polargs::synth
