#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "polargs/core/parallel.h"
#include "polargs/patchmatch/patchmatch.h"

namespace polargs {
namespace {

// Random refinement of the current best; the step halves every sweep.
bool Perturb(const Hypothesis& h, const PmConfig& cfg, int sweep, size_t pixel,
             Hypothesis* out) {
  const double shrink = std::ldexp(1.0, -sweep);
  const double u = 2.0 * HashUniform(cfg.seed, 101, sweep, pixel, 0) - 1.0;
  const double angle = cfg.perturb_angle * shrink * HashUniform(cfg.seed, 101, sweep, pixel, 1);
  const double spin = 2.0 * std::numbers::pi * HashUniform(cfg.seed, 101, sweep, pixel, 2);
  const Eigen::Vector3d t1 = h.normal.unitOrthogonal();
  const Eigen::Vector3d t2 = h.normal.cross(t1);
  const Eigen::Vector3d axis = std::cos(spin) * t1 + std::sin(spin) * t2;
  out->normal = (Eigen::AngleAxisd(angle, axis) * h.normal).normalized();
  out->depth = h.depth * (1.0 + cfg.perturb_rel * shrink * u);
  return out->normal.z() > 0.0 && out->depth > 0.0;
}

}  // namespace

void Propagate(HypothesisField* field, const ViewBundle& bundle, const PmConfig& cfg) {
  const int w = field->width, h = field->height;
  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    for (int color = 0; color < 2; ++color) {
      ParallelFor(0, h, [&](int64_t row) {
        const int y = static_cast<int>(row);
        for (int x = (y + color) % 2; x < w; x += 2) {
          if (!field->valid.at(x, y)) continue;
          const size_t p = field->index(x, y);
          Hypothesis best = field->best[p];
          double best_cost = field->cost[p];
          auto consider = [&](const Hypothesis& cand) {
            const double c = HypothesisCost(x, y, cand, *field, bundle, cfg);
            if (c < best_cost) {
              best_cost = c;
              best = cand;
            }
          };
          if (sweep == 0) {
            for (const Hypothesis& cand : field->candidates[p]) consider(cand);
          }
          if (cfg.propagate_neighbors) {
            constexpr int kOffsets[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
            for (const auto& o : kOffsets) {
              const int qx = x + o[0], qy = y + o[1];
              if (!field->valid.InBounds(qx, qy) || !field->valid.at(qx, qy)) continue;
              consider(field->best[field->index(qx, qy)]);
            }
          }
          if (cfg.refine_perturbation) {
            Hypothesis cand;
            if (Perturb(best, cfg, sweep, p, &cand)) consider(cand);
          }
          field->best[p] = best;
          field->cost[p] = best_cost;
        }
      });
    }
  }
}

}  // namespace polargs
