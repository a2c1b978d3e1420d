#include <algorithm>
#include <cmath>
#include <numbers>

#include "polargs/core/parallel.h"
#include "polargs/synth/scene.h"

namespace polargs::synth {
namespace {

// Margins keep oracle masks away from the detector thresholds so float
// round-off in the angle images cannot flip a pixel.
constexpr double kMaskDolpMin = 0.3 + 1e-3;
constexpr double kMaskIntensityMin = 160.0 / 255.0 + 1e-3;

}  // namespace

RenderedView RenderView(const SceneSpec& scene, const CameraModel& cam, int view_id) {
  scene.Validate();
  cam.Validate();
  const int w = cam.width;
  const int h = cam.height;
  RenderedView out;
  out.capture.view_id = view_id;
  out.capture.camera = cam;
  for (auto& img : out.capture.images) img = FloatImage(w, h, 3);
  out.gt_depth = FloatImage(w, h, 1);
  out.gt_normal = FloatImage(w, h, 3);
  out.gt_azimuth = FloatImage(w, h, 1);
  out.gt_diffuse = FloatImage(w, h, 3);
  out.foreground = Mask(w, h, 1);
  out.specular_mask = Mask(w, h, 1);
  out.overexposed_mask = Mask(w, h, 1);
  out.reflect_specular = Mask(w, h, 1);

  const Eigen::Matrix3d r = cam.rotation();
  const Eigen::Vector3d origin = cam.center();
  const Eigen::Vector3d light = scene.light_dir.normalized();
  const DolpModel& dm = scene.dolp_model;

  ParallelFor(0, h, [&](int64_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector3d ray_cam((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
      const Eigen::Vector3d dir = (r.transpose() * ray_cam).normalized();
      SurfaceHit hit;
      if (!IntersectShape(scene, origin, dir, &hit)) continue;
      Eigen::Vector3d n = hit.normal;
      if (n.dot(dir) > 0.0) n = -n;

      const Eigen::Vector3d view_n = CamToView(r * n);
      const double zenith = std::acos(std::clamp(view_n.z(), -1.0, 1.0));
      const double azimuth = WrapFullTurn(std::atan2(view_n.y(), view_n.x()));

      const double ndl = n.dot(light);
      const Eigen::Vector3d albedo = AlbedoAt(scene, hit.point);
      const Eigen::Vector3d ld =
          albedo * (scene.ambient + (1.0 - scene.ambient) * std::max(0.0, ndl)) *
          scene.light_intensity;
      double ls = 0.0;
      if (ndl > 0.0 && scene.specular.strength > 0.0) {
        const Eigen::Vector3d refl = 2.0 * ndl * n - light;
        ls = scene.specular.strength * scene.light_intensity *
             std::pow(std::max(0.0, refl.dot(-dir)), scene.specular.shininess);
      }
      const double sz = std::sin(zenith);
      const double rho_d = dm.diffuse_max * sz * sz;
      const double rho_s = dm.specular_max;

      // Diffuse light is polarized along the azimuth, specular light
      // perpendicular to it.
      const double c2 = std::cos(2.0 * azimuth);
      const double s2 = std::sin(2.0 * azimuth);
      double s0v[3], s1v[3], s2v[3];
      double max_l = 0.0;
      double pol_mean = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double l = ld[c] + ls;
        max_l = std::max(max_l, l);
        const double pol = ld[c] * rho_d - ls * rho_s;
        pol_mean += pol / 3.0;
        s0v[c] = 2.0 * l;
        s1v[c] = 2.0 * c2 * pol;
        s2v[c] = 2.0 * s2 * pol;
      }
      const bool specular_dominant = ls * rho_s > (ld.sum() / 3.0) * rho_d;
      const bool clipped = max_l > 1.0;
      if (clipped) {
        const double angle = pol_mean >= 0.0 ? azimuth : azimuth + 0.5 * std::numbers::pi;
        for (int c = 0; c < 3; ++c) {
          s0v[c] = 2.0 * std::min(1.0, ld[c] + ls);
          s1v[c] = s0v[c] * dm.overexposed * std::cos(2.0 * angle);
          s2v[c] = s0v[c] * dm.overexposed * std::sin(2.0 * angle);
        }
      }

      double m0 = 0.0, m1 = 0.0, m2 = 0.0, max_i = 0.0;
      for (int c = 0; c < 3; ++c) {
        m0 += s0v[c] / 3.0;
        m1 += s1v[c] / 3.0;
        m2 += s2v[c] / 3.0;
        max_i = std::max(max_i, 0.5 * s0v[c]);
        const float i0 = static_cast<float>(0.5 * (s0v[c] + s1v[c]));
        const float i45 = static_cast<float>(0.5 * (s0v[c] + s2v[c]));
        const float i90 = static_cast<float>(0.5 * (s0v[c] - s1v[c]));
        const float i135 = static_cast<float>(0.5 * (s0v[c] - s2v[c]));
        out.capture.images[0].at(x, y, c) = std::max(0.0f, i0);
        out.capture.images[1].at(x, y, c) = std::max(0.0f, i45);
        out.capture.images[2].at(x, y, c) = std::max(0.0f, i90);
        out.capture.images[3].at(x, y, c) = std::max(0.0f, i135);
        out.gt_diffuse.at(x, y, c) = static_cast<float>(ld[c]);
      }
      const double rho = m0 > 0.0 ? std::sqrt(m1 * m1 + m2 * m2) / m0 : 0.0;

      out.gt_depth.at(x, y) = static_cast<float>((r * hit.point + cam.translation()).z());
      for (int c = 0; c < 3; ++c) out.gt_normal.at(x, y, c) = static_cast<float>(view_n[c]);
      out.gt_azimuth.at(x, y) = static_cast<float>(azimuth);
      out.foreground.at(x, y) = 1;
      out.reflect_specular.at(x, y) = specular_dominant ? 1 : 0;
      out.overexposed_mask.at(x, y) = clipped ? 1 : 0;
      out.specular_mask.at(x, y) =
          (specular_dominant && !clipped && rho >= kMaskDolpMin && max_i >= kMaskIntensityMin)
              ? 1 : 0;
    }
  });
  return out;
}

}  // namespace polargs::synth
