#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "harness.h"
#include "polargs/patchmatch/patchmatch.h"
#include "polargs/splat/refine.h"
#include "polargs/synth/scene.h"

namespace polargs::acceptance {

namespace {

CameraModel MicroCamera(double shift_x) {
  CameraModel cam;
  cam.width = cam.height = 16;
  cam.fx = cam.fy = 20.0;
  cam.cx = cam.cy = 7.5;
  cam.world_to_cam(0, 3) = -shift_x;
  return cam;
}

FloatImage Offset(const FloatImage& base, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.05, 0.3);
  std::bernoulli_distribution sign(0.5);
  FloatImage out = base;
  for (float& v : out.samples()) v += static_cast<float>((sign(rng) ? 1.0 : -1.0) * mag(rng));
  return out;
}

// Random Gaussians in front of two nearby cameras, with targets kept at least
// 0.05 away from the render so no L1 kink lies within the difference step.
struct MicroScene {
  GaussianCloud cloud;
  std::vector<RefineView> views;
};

MicroScene MakeMicroScene(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MicroScene s;
  for (int i = 0; i < 8; ++i) {
    Gaussian g;
    g.mu = {u(rng) - 0.5, u(rng) - 0.5, 2.0 + 2.0 * u(rng)};
    std::normal_distribution<double> n01;
    g.quat = Eigen::Quaterniond(n01(rng), n01(rng), n01(rng), n01(rng)).normalized();
    g.set_scale({0.05 + 0.25 * u(rng), 0.05 + 0.25 * u(rng), 0.05 + 0.25 * u(rng)});
    g.set_opacity(0.2 + 0.6 * u(rng));
    g.color = {0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng), 0.1 + 0.8 * u(rng)};
    s.cloud.gaussians.push_back(g);
  }
  for (double shift : {0.0, 0.3}) {
    RefineView v;
    v.cam = MicroCamera(shift);
    const FloatImage render = Render(s.cloud, v.cam, {}).color;
    v.target = Offset(render, rng);
    v.crm.i_diff = Offset(render, rng);
    v.crm.i_chro = Offset(render, rng);
    v.crm.prop_valid = Mask(16, 16, 1);
    v.masks.specular = Mask(16, 16, 1);
    v.masks.overexposed = Mask(16, 16, 1);
    v.masks.non_reflective = Mask(16, 16, 1);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        const double r = u(rng);
        (r < 0.2 ? v.masks.specular : r < 0.35 ? v.masks.overexposed : v.masks.non_reflective)
            .at(x, y) = 1;
        v.crm.prop_valid.at(x, y) = u(rng) < 0.9;
      }
    }
    s.views.push_back(std::move(v));
  }
  return s;
}

// True when the opacity step moves one of the Gaussian's fragments across the
// 1/255 contributor cutoff, where the rendered color jumps.
bool CrossesCutoff(const MicroScene& s, size_t i, double o_lo, double o_hi) {
  for (const RefineView& v : s.views) {
    FragmentBuffer frags;
    Render(s.cloud, v.cam, {}, &frags);
    for (const Fragment& f : frags.fragments) {
      if (f.gaussian != i) continue;
      if ((o_lo * f.weight < kAlphaMin) != (o_hi * f.weight < kAlphaMin)) return true;
    }
  }
  return false;
}

}  // namespace

Outcome GradientCheck() {
  constexpr double kH = 1e-4;
  double worst = 0.0;
  size_t checked = 0, skipped = 0;
  for (uint64_t scene = 0; scene < 50; ++scene) {
    MicroScene s = MakeMicroScene(1000 + scene);
    RefineConfig cfg;
    cfg.lambda_dssim = 0.0;
    const ColorObjective objective(s.cloud, s.views, cfg);
    std::vector<Eigen::Vector3d> gc;
    std::vector<double> go;
    objective.Evaluate(s.cloud, &gc, &go);
    auto compare = [&](double analytic, double numeric) {
      const double rel =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      worst = std::max(worst, rel);
      ++checked;
    };
    for (size_t i = 0; i < s.cloud.size(); ++i) {
      for (int c = 0; c < 3; ++c) {
        GaussianCloud plus = s.cloud, minus = s.cloud;
        plus.gaussians[i].color[c] += kH;
        minus.gaussians[i].color[c] -= kH;
        compare(gc[i][c], (objective.Evaluate(plus) - objective.Evaluate(minus)) / (2.0 * kH));
      }
      const double o = s.cloud.gaussians[i].opacity();
      if (CrossesCutoff(s, i, o - kH, o + kH)) {
        ++skipped;
        continue;
      }
      GaussianCloud plus = s.cloud, minus = s.cloud;
      plus.gaussians[i].set_opacity(o + kH);
      minus.gaussians[i].set_opacity(o - kH);
      compare(go[i], (objective.Evaluate(plus) - objective.Evaluate(minus)) / (2.0 * kH));
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "max relative error %.3g over %zu parameters (< 1e-4), %zu opacity steps "
                "straddling the 1/255 cutoff skipped",
                worst, checked, skipped);
  return {worst < 1e-4, buf};
}

Outcome PropagationEquivalence() {
  synth::SceneSpec scene;
  scene.textured = true;
  const synth::CameraIntrinsics intr{8, 8, 12.0, 12.0};
  const auto cams = synth::MakeCameraRing(16, 3.0, 0.3, Eigen::Vector3d::Zero(), intr);
  std::vector<PmView> views;
  for (int v = 0; v < 3; ++v) {
    const synth::RenderedView r = synth::RenderView(scene, cams[v], v);
    views.push_back(MakePmView(r.capture, synth::CorruptDepth(r.gt_depth, 0.05, 0.2, 40 + v),
                               synth::CorruptNormals(r.gt_normal, 0.3, 50 + v), r.foreground));
  }
  PmConfig cfg;
  cfg.ncc_window = 5;
  cfg.sweeps = 1;
  cfg.propagate_neighbors = false;
  cfg.refine_perturbation = false;
  const ViewBundle bundle{&views[0], {&views[1], &views[2]}};
  HypothesisField field = InitHypotheses(views[0], cfg);
  const HypothesisField initial = field;
  Propagate(&field, bundle, cfg);

  size_t pixels = 0, mismatches = 0;
  for (int y = 0; y < field.height; ++y) {
    for (int x = 0; x < field.width; ++x) {
      if (!field.valid.at(x, y)) continue;
      const size_t p = field.index(x, y);
      double best = std::numeric_limits<double>::infinity();
      Hypothesis arg;
      for (const Hypothesis& h : initial.candidates[p]) {
        const double c = HypothesisCost(x, y, h, initial, bundle, cfg);
        if (c < best) {
          best = c;
          arg = h;
        }
      }
      ++pixels;
      mismatches += !(best == field.cost[p] && arg.depth == field.best[p].depth &&
                      arg.normal == field.best[p].normal);
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%zu of %zu pixels differ from brute force (0)", mismatches,
                pixels);
  return {pixels > 0 && mismatches == 0, buf};
}

}  // namespace polargs::acceptance
