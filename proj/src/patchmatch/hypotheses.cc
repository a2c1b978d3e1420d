#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "polargs/core/parallel.h"
#include "polargs/patchmatch/patchmatch.h"

namespace polargs {

void PmConfig::Validate() const {
  POLARGS_CHECK(tau > 0 && sigma > 0, ErrorKind::kConfig, "patchmatch: tau and sigma must be positive");
  POLARGS_CHECK(lambda1 >= 0 && lambda2 >= 0, ErrorKind::kConfig,
                "patchmatch: lambda weights must be non-negative");
  POLARGS_CHECK(ncc_window >= 3 && ncc_window % 2 == 1, ErrorKind::kConfig,
                "patchmatch: ncc_window must be odd and >= 3");
  POLARGS_CHECK(nd_window >= 3 && nd_window % 2 == 1, ErrorKind::kConfig,
                "patchmatch: nd_window must be odd and >= 3");
  POLARGS_CHECK(ncc_sigma_spatial > 0 && ncc_sigma_color > 0, ErrorKind::kConfig,
                "patchmatch: bilateral sigmas must be positive");
  POLARGS_CHECK(sweeps >= 0 && perturb_rel >= 0 && perturb_angle >= 0, ErrorKind::kConfig,
                "patchmatch: invalid sweep or perturbation settings");
  POLARGS_CHECK(geo_px_thresh > 0 && geo_depth_rel_thresh > 0 && polar_eps_thresh > 0 &&
                    min_consistent_views >= 1,
                ErrorKind::kConfig, "patchmatch: invalid consistency thresholds");
  POLARGS_CHECK(reflective_pixel_threshold >= 0, ErrorKind::kConfig,
                "patchmatch: negative reflective pixel threshold");
}

FloatImage GrayImage(const FloatImage& rgb) {
  FloatImage out(rgb.width(), rgb.height(), 1);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      double s = 0.0;
      for (int c = 0; c < rgb.channels(); ++c) s += rgb.at(x, y, c);
      out.at(x, y) = static_cast<float>(s / rgb.channels());
    }
  }
  return out;
}

PmView MakePmView(const PolarizedCapture& capture, const FloatImage& init_depth,
                  const FloatImage& init_normal, const Mask& foreground) {
  const StokesImage stokes = StokesFromAngles(capture);
  PmView v;
  v.view_id = capture.view_id;
  v.cam = capture.camera;
  v.gray = GrayImage(IntensityImage(stokes));
  v.polar = AolpDolp(stokes);
  v.init_depth = init_depth;
  v.init_normal = init_normal;
  v.foreground = foreground;
  return v;
}

FloatImage HypothesisField::DepthMap() const {
  FloatImage out(width, height, 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (valid.at(x, y)) out.at(x, y) = static_cast<float>(best[index(x, y)].depth);
    }
  }
  return out;
}

FloatImage HypothesisField::NormalMap() const {
  FloatImage out(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!valid.at(x, y)) continue;
      const Eigen::Vector3d& n = best[index(x, y)].normal;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(n[c]);
    }
  }
  return out;
}

FloatImage HypothesisField::CostMap() const {
  FloatImage out(width, height, 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (valid.at(x, y)) out.at(x, y) = static_cast<float>(cost[index(x, y)]);
    }
  }
  return out;
}

std::array<double, 4> AolpCandidates(double phi) {
  constexpr double kHalfPi = 0.5 * std::numbers::pi;
  return {WrapFullTurn(phi - kHalfPi), WrapFullTurn(phi), WrapFullTurn(phi + kHalfPi),
          WrapFullTurn(phi + std::numbers::pi)};
}

Eigen::Vector3d NormalFromAolp(double phi, double theta) {
  const double s = std::sin(theta);
  return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

double HypothesisZenith(const Eigen::Vector3d& n) {
  const double len = n.norm();
  if (!(len > 1e-12)) return 0.25 * std::numbers::pi;
  const double theta = std::acos(std::clamp(n.z() / len, -1.0, 1.0));
  return std::clamp(theta, 0.0, 0.5 * std::numbers::pi - 1e-3);
}

HypothesisField InitHypotheses(const PmView& view, const PmConfig& cfg) {
  const FloatImage& depth = view.init_depth;
  const int w = depth.width(), h = depth.height();
  POLARGS_CHECK(view.init_normal.SameSize(depth) && view.polar.aolp.SameSize(depth) &&
                    (view.foreground.empty() || view.foreground.SameSize(depth)),
                ErrorKind::kDimension, "init_hypotheses: map sizes differ");
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
  for (float d : depth.samples()) {
    if (d > 0.0f) {
      dmin = std::min(dmin, static_cast<double>(d));
      dmax = std::max(dmax, static_cast<double>(d));
    }
  }
  POLARGS_CHECK(dmax > 0.0, ErrorKind::kData, "init_hypotheses: initial depth map is empty");

  HypothesisField field;
  field.width = w;
  field.height = h;
  field.candidates.resize(static_cast<size_t>(w) * h);
  field.best.resize(field.candidates.size());
  field.cost.assign(field.candidates.size(), std::numeric_limits<double>::infinity());
  field.valid = Mask(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool fg = view.foreground.empty() ? depth.at(x, y) > 0.0f : view.foreground.at(x, y);
      if (!fg) continue;
      field.valid.at(x, y) = 1;
      const size_t p = field.index(x, y);
      double d = depth.at(x, y);
      if (!(d > 0.0)) d = dmin + (dmax - dmin) * HashUniform(cfg.seed, view.view_id, p, 0);
      const double u = 2.0 * HashUniform(cfg.seed, view.view_id, p, 1) - 1.0;
      const double d_prt = d * (1.0 + cfg.perturb_rel * u);
      Eigen::Vector3d n(view.init_normal.at(x, y, 0), view.init_normal.at(x, y, 1),
                        view.init_normal.at(x, y, 2));
      // A missing normal keeps the pi/4 zenith fallback for the AoLP branches.
      const bool missing = !(n.norm() > 1e-12);
      if (!missing) {
        n.normalize();
        if (n.z() < 0.0) n = -n;
      }
      const double theta = HypothesisZenith(missing ? Eigen::Vector3d::Zero() : n);
      if (missing) n = Eigen::Vector3d::UnitZ();
      std::array<Eigen::Vector3d, 4> n_aolp;
      if (view.polar.valid.at(x, y)) {
        const auto phis = AolpCandidates(view.polar.aolp.at(x, y));
        for (int i = 0; i < 4; ++i) n_aolp[i] = NormalFromAolp(phis[i], theta);
      } else {
        n_aolp.fill(n);
      }
      auto& c = field.candidates[p];
      c.reserve(10);
      c.push_back({d, n});
      c.push_back({d_prt, n});
      for (int i = 0; i < 4; ++i) c.push_back({d, n_aolp[i]});
      for (int i = 0; i < 4; ++i) c.push_back({d_prt, n_aolp[i]});
      field.best[p] = c.front();
    }
  }

  field.nd_moments.resize(field.candidates.size());
  const int half = cfg.nd_window / 2;
  ParallelFor(0, h, [&](int64_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      if (!field.valid.at(x, y)) continue;
      DepthMoments& m = field.nd_moments[field.index(x, y)];
      for (int qy = std::max(0, y - half); qy <= std::min(h - 1, y + half); ++qy) {
        for (int qx = std::max(0, x - half); qx <= std::min(w - 1, x + half); ++qx) {
          const double d = depth.at(qx, qy);
          if ((qx == x && qy == y) || !(d > 0.0)) continue;
          m.Add(BackprojectToCamera(view.cam, {double(qx), double(qy)}, d));
        }
      }
    }
  });
  return field;
}

bool DensifySchedule(int step, int interval, int start, int end) {
  POLARGS_CHECK(interval > 0, ErrorKind::kConfig, "densify interval must be positive");
  return step >= start && step <= end && step % interval == 0;
}

}  // namespace polargs
