#include "polargs/splat/render.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numeric>

#include "polargs/core/parallel.h"

namespace polargs {
namespace {

constexpr int kTile = 16;

std::array<double, 14> ParameterKey(const Gaussian& g) {
  return {g.mu.x(),        g.mu.y(),        g.mu.z(),          g.quat.w(), g.quat.x(),
          g.quat.y(),      g.quat.z(),      g.log_scale.x(),   g.log_scale.y(),
          g.log_scale.z(), g.opacity_logit, g.color.x(),       g.color.y(), g.color.z()};
}

struct Splat {
  Eigen::Vector2d mean;
  double conic_a, conic_b, conic_c;  // inverse 2D covariance
  double depth;
  Eigen::Vector3d t_cam;
  Eigen::Vector3d n_cam;  // unit, facing the camera
  double plane_limit;     // max deviation of planar depth from the centre
  int x0, y0, x1, y1;     // pixel bounding box (inclusive)
};

double Footprint(const Splat& s, double px, double py) {
  const double dx = px - s.mean.x();
  const double dy = py - s.mean.y();
  const double power =
      -0.5 * (s.conic_a * dx * dx + 2.0 * s.conic_b * dx * dy + s.conic_c * dy * dy);
  if (power > 0.0) return 0.0;
  return std::exp(power);
}

double ContributorDepth(const Splat& s, const CameraModel& cam, double px, double py,
                        bool planar) {
  if (!planar) return s.depth;
  const Eigen::Vector3d ray((px - cam.cx) / cam.fx, (py - cam.cy) / cam.fy, 1.0);
  const double denom = s.n_cam.dot(ray);
  if (std::abs(denom) < 0.2 * ray.norm()) return s.depth;
  const double d = s.n_cam.dot(s.t_cam) / denom;
  if (!(std::abs(d - s.depth) <= s.plane_limit)) return s.depth;
  return d;
}

}  // namespace

std::vector<uint32_t> CanonicalOrder(const GaussianCloud& cloud, const CameraModel& cam) {
  std::vector<double> depth(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) depth[i] = cam.WorldToCam(cloud.gaussians[i].mu).z();
  std::vector<uint32_t> order(cloud.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    if (depth[a] != depth[b]) return depth[a] < depth[b];
    const auto ka = ParameterKey(cloud.gaussians[a]);
    const auto kb = ParameterKey(cloud.gaussians[b]);
    return std::memcmp(ka.data(), kb.data(), sizeof(ka)) < 0;
  });
  return order;
}

Eigen::Vector3d CompositeColor(std::span<const Fragment> frags, const GaussianCloud& cloud,
                               const Eigen::Vector3d& background, double* weight_sum) {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double t = 1.0;
  for (const Fragment& f : frags) {
    const Gaussian& g = cloud.gaussians[f.gaussian];
    const double a = std::min(kAlphaMax, g.opacity() * f.weight);
    if (a < kAlphaMin) continue;
    color += (a * t) * g.color;
    t *= 1.0 - a;
    if (t < kTransmittanceMin) break;
  }
  if (weight_sum) *weight_sum = 1.0 - t;
  return color + t * background;
}

SplatRender Render(const GaussianCloud& cloud, const CameraModel& cam,
                   const RenderOptions& options, FragmentBuffer* fragments) {
  const int w = cam.width, h = cam.height;
  SplatRender out{FloatImage(w, h, 3), FloatImage(w, h, 1), FloatImage(w, h, 3),
                  FloatImage(w, h, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = static_cast<float>(options.background[c]);
    }
  }

  const std::vector<uint32_t> order = CanonicalOrder(cloud, cam);
  const Eigen::Matrix3d rot = cam.rotation();
  std::vector<Splat> splats(cloud.size());
  std::vector<uint8_t> live(cloud.size(), 0);
  for (size_t i = 0; i < cloud.size(); ++i) {
    const Gaussian& g = cloud.gaussians[i];
    const ProjectedGaussian p = ProjectGaussian(g, cam, options.dilation);
    if (!p.visible) continue;
    Splat& s = splats[i];
    const Eigen::Matrix2d inv = p.cov.inverse();
    s.mean = p.mean;
    s.conic_a = inv(0, 0);
    s.conic_b = 0.5 * (inv(0, 1) + inv(1, 0));
    s.conic_c = inv(1, 1);
    s.depth = p.depth;
    s.t_cam = cam.WorldToCam(g.mu);
    s.n_cam = rot * g.MinAxis();
    if (s.n_cam.dot(s.t_cam) > 0.0) s.n_cam = -s.n_cam;
    s.plane_limit = 3.0 * g.scale().maxCoeff();
    const double mid = 0.5 * (p.cov(0, 0) + p.cov(1, 1));
    const double det = p.cov.determinant();
    const double lambda = mid + std::sqrt(std::max(0.0, mid * mid - det));
    // Beyond this radius the footprint is below kAlphaMin for any opacity.
    const double radius = std::sqrt(2.0 * std::log(255.0) * lambda);
    s.x0 = std::max(0, static_cast<int>(std::ceil(p.mean.x() - radius)));
    s.y0 = std::max(0, static_cast<int>(std::ceil(p.mean.y() - radius)));
    s.x1 = std::min(w - 1, static_cast<int>(std::floor(p.mean.x() + radius)));
    s.y1 = std::min(h - 1, static_cast<int>(std::floor(p.mean.y() + radius)));
    live[i] = s.x0 <= s.x1 && s.y0 <= s.y1;
  }

  const int tiles_x = (w + kTile - 1) / kTile;
  const int tiles_y = (h + kTile - 1) / kTile;
  std::vector<std::vector<uint32_t>> bins(static_cast<size_t>(tiles_x) * tiles_y);
  for (uint32_t i : order) {
    if (!live[i]) continue;
    const Splat& s = splats[i];
    for (int ty = s.y0 / kTile; ty <= s.y1 / kTile; ++ty) {
      for (int tx = s.x0 / kTile; tx <= s.x1 / kTile; ++tx) {
        bins[static_cast<size_t>(ty) * tiles_x + tx].push_back(i);
      }
    }
  }

  std::vector<std::vector<Fragment>> per_pixel;
  if (fragments) per_pixel.resize(static_cast<size_t>(w) * h);

  ParallelFor(0, static_cast<int64_t>(bins.size()), [&](int64_t tile) {
    const auto& bin = bins[tile];
    const int tx = static_cast<int>(tile % tiles_x), ty = static_cast<int>(tile / tiles_x);
    std::vector<Fragment> frags;
    for (int y = ty * kTile; y < std::min(h, (ty + 1) * kTile); ++y) {
      for (int x = tx * kTile; x < std::min(w, (tx + 1) * kTile); ++x) {
        frags.clear();
        for (uint32_t i : bin) {
          const Splat& s = splats[i];
          if (x < s.x0 || x > s.x1 || y < s.y0 || y > s.y1) continue;
          const double g = Footprint(s, x, y);
          if (g < kAlphaMin) continue;
          frags.push_back({i, g});
        }
        Eigen::Vector3d color = Eigen::Vector3d::Zero();
        Eigen::Vector3d normal = Eigen::Vector3d::Zero();
        double depth = 0.0, t = 1.0;
        for (const Fragment& f : frags) {
          const Gaussian& g = cloud.gaussians[f.gaussian];
          const double a = std::min(kAlphaMax, g.opacity() * f.weight);
          if (a < kAlphaMin) continue;
          const double wgt = a * t;
          const Splat& s = splats[f.gaussian];
          color += wgt * g.color;
          depth += wgt * ContributorDepth(s, cam, x, y, options.planar_depth);
          normal += wgt * CamToView(s.n_cam);
          t *= 1.0 - a;
          if (t < kTransmittanceMin) break;
        }
        const double acc = 1.0 - t;
        color += t * options.background;
        for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = static_cast<float>(color[c]);
        out.alpha.at(x, y) = static_cast<float>(acc);
        if (acc > 0.0) {
          out.depth.at(x, y) = static_cast<float>(depth / acc);
          const double nn = normal.norm();
          if (nn > 0.0) {
            for (int c = 0; c < 3; ++c) out.normal.at(x, y, c) = static_cast<float>(normal[c] / nn);
          }
        }
        if (fragments) per_pixel[static_cast<size_t>(y) * w + x] = frags;
      }
    }
  });

  if (fragments) {
    fragments->width = w;
    fragments->height = h;
    fragments->offsets.assign(static_cast<size_t>(w) * h + 1, 0);
    fragments->fragments.clear();
    for (size_t p = 0; p < per_pixel.size(); ++p) {
      fragments->offsets[p] = static_cast<uint32_t>(fragments->fragments.size());
      fragments->fragments.insert(fragments->fragments.end(), per_pixel[p].begin(),
                                  per_pixel[p].end());
    }
    fragments->offsets.back() = static_cast<uint32_t>(fragments->fragments.size());
  }
  return out;
}

}  // namespace polargs
