#include "polargs/splat/refine.h"

#include <algorithm>
#include <cmath>

#include "polargs/splat/losses.h"

namespace polargs {
namespace {

struct Contribution {
  uint32_t gaussian;
  double alpha;
  double transmittance;
  double weight;  // footprint value
};

// Same arithmetic as CompositeColor, keeping the contributors for the
// backward pass.
Eigen::Vector3d CompositeWithTrace(std::span<const Fragment> frags, const GaussianCloud& cloud,
                                   const Eigen::Vector3d& background,
                                   std::vector<Contribution>* used, double* t_end) {
  used->clear();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double t = 1.0;
  for (const Fragment& f : frags) {
    const Gaussian& g = cloud.gaussians[f.gaussian];
    const double a = std::min(kAlphaMax, g.opacity() * f.weight);
    if (a < kAlphaMin) continue;
    used->push_back({f.gaussian, a, t, f.weight});
    color += (a * t) * g.color;
    t *= 1.0 - a;
    if (t < kTransmittanceMin) break;
  }
  *t_end = t;
  return color + t * background;
}

bool IsReflectivePixel(const ReflectiveMasks& m, int x, int y) {
  return m.specular.at(x, y) || m.overexposed.at(x, y);
}

}  // namespace

size_t FlagReflectiveGaussians(GaussianCloud* cloud, const std::vector<RefineView>& views,
                               const RenderOptions& options) {
  for (Gaussian& g : cloud->gaussians) g.reflective = false;
  for (const RefineView& v : views) {
    FragmentBuffer frags;
    Render(*cloud, v.cam, options, &frags);
    for (int y = 0; y < frags.height; ++y) {
      for (int x = 0; x < frags.width; ++x) {
        if (!IsReflectivePixel(v.masks, x, y)) continue;
        for (const Fragment& f : frags.at(x, y)) {
          Gaussian& g = cloud->gaussians[f.gaussian];
          if (std::min(kAlphaMax, g.opacity() * f.weight) >= kAlphaMin) g.reflective = true;
        }
      }
    }
  }
  return static_cast<size_t>(std::count_if(cloud->gaussians.begin(), cloud->gaussians.end(),
                                           [](const Gaussian& g) { return g.reflective; }));
}

ColorObjective::ColorObjective(const GaussianCloud& cloud, const std::vector<RefineView>& views,
                               const RefineConfig& cfg)
    : views_(views), cfg_(cfg) {
  for (const RefineView& v : views) {
    fragments_.emplace_back();
    Render(cloud, v.cam, cfg.render, &fragments_.back());
    targets_.push_back(v.target.Cast<double>());
  }
}

double ColorObjective::Evaluate(const GaussianCloud& cloud,
                                std::vector<Eigen::Vector3d>* grad_color,
                                std::vector<double>* grad_opacity) const {
  const bool want_grad = grad_color || grad_opacity;
  std::vector<Eigen::Vector3d> gc;
  std::vector<double> go;
  if (want_grad) {
    gc.assign(cloud.size(), Eigen::Vector3d::Zero());
    go.assign(cloud.size(), 0.0);
  }
  double total = 0.0;
  std::vector<Contribution> used;
  for (size_t v = 0; v < views_.size(); ++v) {
    const FragmentBuffer& frags = fragments_[v];
    const int w = frags.width, h = frags.height;
    DoubleImage render(w, h, 3);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double t_end;
        const Eigen::Vector3d c =
            CompositeWithTrace(frags.at(x, y), cloud, cfg_.render.background, &used, &t_end);
        for (int k = 0; k < 3; ++k) render.at(x, y, k) = c[k];
      }
    }
    DoubleImage grad;
    total += LossColor(render, targets_[v], views_[v].crm, views_[v].masks, cfg_.lambda_ref,
                       cfg_.lambda_dssim, want_grad ? &grad : nullptr);
    if (!want_grad) continue;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Eigen::Vector3d dl(grad.at(x, y, 0), grad.at(x, y, 1), grad.at(x, y, 2));
        if (dl.isZero(0.0)) continue;
        double t_end;
        CompositeWithTrace(frags.at(x, y), cloud, cfg_.render.background, &used, &t_end);
        Eigen::Vector3d behind = t_end * cfg_.render.background;
        for (auto it = used.rbegin(); it != used.rend(); ++it) {
          const Gaussian& g = cloud.gaussians[it->gaussian];
          const double wt = it->alpha * it->transmittance;
          gc[it->gaussian] += wt * dl;
          const Eigen::Vector3d dc_da = it->transmittance * g.color - behind / (1.0 - it->alpha);
          if (g.opacity() * it->weight < kAlphaMax) {
            go[it->gaussian] += dl.dot(dc_da) * it->weight;
          }
          behind += wt * g.color;
        }
      }
    }
  }
  if (grad_color) *grad_color = std::move(gc);
  if (grad_opacity) *grad_opacity = std::move(go);
  return total;
}

RefineResult RefineReflectiveColors(const GaussianCloud& cloud,
                                    const std::vector<RefineView>& views,
                                    const RefineConfig& cfg) {
  RefineResult result;
  result.cloud = cloud;
  result.flagged = FlagReflectiveGaussians(&result.cloud, views, cfg.render);
  const ColorObjective objective(result.cloud, views, cfg);
  double loss = objective.Evaluate(result.cloud);
  result.loss_trace.push_back(loss);
  if (result.flagged == 0) return result;

  std::vector<size_t> active;
  for (size_t i = 0; i < result.cloud.size(); ++i) {
    if (result.cloud.gaussians[i].reflective) active.push_back(i);
  }
  // Parameters per active Gaussian: r, g, b, opacity logit.
  std::vector<Eigen::Vector4d> second_moment(active.size(), Eigen::Vector4d::Zero());
  double step = cfg.lr;
  std::vector<Eigen::Vector3d> gc;
  std::vector<double> go;
  for (int it = 0; it < cfg.steps; ++it) {
    objective.Evaluate(result.cloud, &gc, &go);
    std::vector<Eigen::Vector4d> dir(active.size());
    for (size_t k = 0; k < active.size(); ++k) {
      const Gaussian& g = result.cloud.gaussians[active[k]];
      const double o = g.opacity();
      const Eigen::Vector4d grad(gc[active[k]].x(), gc[active[k]].y(), gc[active[k]].z(),
                                 go[active[k]] * o * (1.0 - o));
      const Eigen::Vector4d sq = grad.cwiseProduct(grad);
      second_moment[k] = it == 0 ? sq : 0.9 * second_moment[k] + 0.1 * sq;
      dir[k] = -grad.array() / (second_moment[k].array().sqrt() + 1e-12);
    }
    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      GaussianCloud trial = result.cloud;
      for (size_t k = 0; k < active.size(); ++k) {
        Gaussian& g = trial.gaussians[active[k]];
        g.color = (g.color + step * dir[k].head<3>()).cwiseMax(0.0).cwiseMin(1.0);
        g.opacity_logit = std::clamp(g.opacity_logit + step * dir[k][3], -9.0, 9.0);
      }
      const double trial_loss = objective.Evaluate(trial);
      if (trial_loss < loss) {
        result.cloud = std::move(trial);
        loss = trial_loss;
        accepted = true;
        step = std::min(step * 1.25, 10.0 * cfg.lr);
      } else {
        step *= 0.5;
      }
    }
    result.loss_trace.push_back(loss);
  }
  return result;
}

}  // namespace polargs
