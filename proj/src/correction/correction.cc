#include "polargs/correction/correction.h"

#include <algorithm>
#include <cmath>

#include "polargs/core/parallel.h"
#include "polargs/correction/ssim.h"

namespace polargs {

void CorrectionConfig::Validate() const {
  POLARGS_CHECK(dolp_spec_min > dolp_over_max && dolp_spec_min <= 1.0 && dolp_over_max >= 0.0,
                ErrorKind::kConfig, "correction: dolp thresholds out of order");
  POLARGS_CHECK(intensity_min > 0.0 && intensity_min <= 1.0, ErrorKind::kConfig,
                "correction: intensity_min must lie in (0, 1]");
  POLARGS_CHECK(mahalanobis_max > 0.0 && rho_d > 0.0 && search_radius > 0,
                ErrorKind::kConfig, "correction: non-positive parameter");
  POLARGS_CHECK(lambda_dssim >= 0.0 && lambda_dssim <= 1.0, ErrorKind::kConfig,
                "correction: lambda_dssim must lie in [0, 1]");
  POLARGS_CHECK(reflective_pixel_threshold >= 0, ErrorKind::kConfig,
                "correction: negative reflective pixel threshold");
}

ReflectiveMasks LocalizeReflective(const PolarMaps& polar, const FloatImage& intensity,
                                   const CorrectionConfig& cfg, const Mask& foreground) {
  POLARGS_CHECK(polar.dolp.SameSize(intensity) && polar.valid.SameSize(intensity) &&
                    (foreground.empty() || foreground.SameSize(intensity)),
                ErrorKind::kDimension, "localize_reflective: map sizes differ");
  const int w = intensity.width(), h = intensity.height();
  Mask spec(w, h, 1), over(w, h, 1), fg(w, h, 1, 1);
  if (!foreground.empty()) fg = foreground;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!fg.at(x, y)) continue;
      double peak = 0.0;
      for (int c = 0; c < intensity.channels(); ++c) {
        peak = std::max(peak, static_cast<double>(intensity.at(x, y, c)));
      }
      if (peak < cfg.intensity_min) continue;
      const double rho = polar.dolp.at(x, y);
      if (rho >= cfg.dolp_spec_min) spec.at(x, y) = 1;
      if (rho <= cfg.dolp_over_max) over.at(x, y) = 1;
    }
  }
  ReflectiveMasks out{MorphologicalOpen3x3(spec), MorphologicalOpen3x3(over), Mask(w, h, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.non_reflective.at(x, y) =
          fg.at(x, y) && !out.specular.at(x, y) && !out.overexposed.at(x, y);
    }
  }
  return out;
}

FloatImage ComputePri(const PolarizedCapture& capture) {
  const FloatImage& ref = capture.images[0];
  for (const auto& img : capture.images) {
    POLARGS_CHECK(img.SameShape(ref), ErrorKind::kDimension, "compute_pri: angle images differ");
  }
  FloatImage out(ref.width(), ref.height(), 1);
  for (int y = 0; y < ref.height(); ++y) {
    for (int x = 0; x < ref.width(); ++x) {
      double sum = 0.0;
      for (const auto& img : capture.images) {
        const float* p = img.pixel(x, y);
        const auto [lo, hi] = std::minmax_element(p, p + img.channels());
        sum += static_cast<double>(*hi) - static_cast<double>(*lo);
      }
      out.at(x, y) = static_cast<float>(sum / 4.0);
    }
  }
  return out;
}

FloatImage ComputeIdiff(const StokesImage& stokes) {
  FloatImage out(stokes.s0.width(), stokes.s0.height(), stokes.s0.channels());
  for (size_t i = 0; i < out.size(); ++i) {
    const double s0 = stokes.s0.data()[i];
    const double s1 = stokes.s1.data()[i];
    const double s2 = stokes.s2.data()[i];
    out.data()[i] = static_cast<float>(std::max(0.0, (s0 - std::sqrt(s1 * s1 + s2 * s2)) / 2.0));
  }
  return out;
}

Propagation PropagateDiffuse(const FloatImage& i_diff, const FloatImage& pri,
                             const ReflectiveMasks& masks, const CorrectionConfig& cfg) {
  const int w = pri.width(), h = pri.height();
  POLARGS_CHECK(i_diff.SameSize(pri) && masks.specular.SameSize(pri) &&
                    masks.overexposed.SameSize(pri) && masks.non_reflective.SameSize(pri),
                ErrorKind::kDimension, "propagate_diffuse: size mismatch");
  double sum = 0.0, sum2 = 0.0;
  size_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!masks.non_reflective.at(x, y)) continue;
      const double v = pri.at(x, y);
      sum += v;
      sum2 += v * v;
      ++n;
    }
  }
  POLARGS_CHECK(n > 0, ErrorKind::kUnavailable,
                "propagate_diffuse: no non-reflective pixels to propagate from");
  const double mean = sum / n;
  const double var = std::max(sum2 / n - mean * mean, 1e-12);
  const double inv_sigma = 1.0 / std::sqrt(var);

  Propagation out{FloatImage(w, h, i_diff.channels()), Mask(w, h, 1)};
  ParallelFor(0, h, [&](int64_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      if (!masks.specular.at(x, y) && !masks.overexposed.at(x, y)) continue;
      const double key = pri.at(x, y);
      int donor_x = -1, donor_y = -1;
      for (int r = 1; r <= cfg.search_radius && donor_x < 0; ++r) {
        for (int dy = -r; dy <= r && donor_x < 0; ++dy) {
          const int step = (dy == -r || dy == r) ? 1 : 2 * r;
          for (int dx = -r; dx <= r; dx += step) {
            const int qx = x + dx, qy = y + dy;
            if (!pri.InBounds(qx, qy) || !masks.non_reflective.at(qx, qy)) continue;
            if (std::abs(pri.at(qx, qy) - key) * inv_sigma < cfg.mahalanobis_max) {
              donor_x = qx;
              donor_y = qy;
              break;
            }
          }
        }
      }
      if (donor_x < 0) continue;
      out.prop_valid.at(x, y) = 1;
      for (int c = 0; c < i_diff.channels(); ++c) {
        out.i_prop.at(x, y, c) = i_diff.at(donor_x, donor_y, c);
      }
    }
  });
  return out;
}

FloatImage ComputeIchro(const FloatImage& i_prop, const FloatImage& i_diff,
                        const CorrectionConfig& cfg) {
  POLARGS_CHECK(i_prop.SameShape(i_diff), ErrorKind::kDimension,
                "compute_ichro: size mismatch");
  constexpr double kEps = 1e-8;
  FloatImage out(i_prop.width(), i_prop.height(), i_prop.channels());
  const int nc = i_prop.channels();
  for (int y = 0; y < i_prop.height(); ++y) {
    for (int x = 0; x < i_prop.width(); ++x) {
      double prop_sum = 0.0, diff_mean = 0.0;
      for (int c = 0; c < nc; ++c) {
        prop_sum += i_prop.at(x, y, c);
        diff_mean += i_diff.at(x, y, c) / nc;
      }
      const double denom = std::max(prop_sum + diff_mean, kEps);
      for (int c = 0; c < nc; ++c) {
        out.at(x, y, c) =
            static_cast<float>(std::clamp(cfg.rho_d * i_prop.at(x, y, c) / denom, 0.0, 1.0));
      }
    }
  }
  return out;
}

CrmSet BuildCrms(const PolarizedCapture& capture, const ReflectiveMasks& masks,
                 const CorrectionConfig& cfg) {
  const StokesImage stokes = StokesFromAngles(capture);
  CrmSet crm;
  crm.pri = ComputePri(capture);
  crm.i_diff = ComputeIdiff(stokes);
  Propagation prop = PropagateDiffuse(crm.i_diff, crm.pri, masks, cfg);
  crm.i_prop = std::move(prop.i_prop);
  crm.prop_valid = std::move(prop.prop_valid);
  crm.i_chro = ComputeIchro(crm.i_prop, crm.i_diff, cfg);
  return crm;
}

double MaskedPhotometricLoss(const DoubleImage& a, const DoubleImage& b, const Mask& mask,
                             double lambda_dssim, DoubleImage* grad_a, double weight) {
  POLARGS_CHECK(a.SameShape(b) && mask.SameSize(a), ErrorKind::kDimension,
                "photometric loss: size mismatch");
  const size_t count = static_cast<size_t>(CountNonZero(mask));
  if (count == 0) return 0.0;
  if (grad_a && grad_a->empty()) *grad_a = DoubleImage(a.width(), a.height(), a.channels());
  const int nc = a.channels();
  const double l1_norm = 1.0 / (static_cast<double>(count) * nc);
  double l1 = 0.0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (!mask.at(x, y)) continue;
      for (int c = 0; c < nc; ++c) {
        const double r = a.at(x, y, c) - b.at(x, y, c);
        l1 += std::abs(r);
        if (grad_a && r != 0.0) {
          grad_a->at(x, y, c) +=
              weight * (1.0 - lambda_dssim) * l1_norm * (r > 0.0 ? 1.0 : -1.0);
        }
      }
    }
  }
  double loss = (1.0 - lambda_dssim) * l1 * l1_norm;
  if (lambda_dssim > 0.0) {
    DoubleImage g;
    const double d = MaskedDssim(a, b, mask, grad_a ? &g : nullptr);
    loss += lambda_dssim * d;
    if (grad_a) {
      for (size_t i = 0; i < g.size(); ++i) grad_a->data()[i] += weight * lambda_dssim * g.data()[i];
    }
  }
  return loss;
}

Mask ValidTargetMask(const Mask& mask, const Mask& prop_valid) {
  Mask out(mask.width(), mask.height(), 1);
  for (size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = mask.data()[i] && prop_valid.data()[i];
  }
  return out;
}

double ReflectiveLoss(const FloatImage& render, const CrmSet& crm,
                      const ReflectiveMasks& masks, const CorrectionConfig& cfg) {
  POLARGS_CHECK(render.SameShape(crm.i_diff), ErrorKind::kDimension,
                "reflective_loss: render and CRM sizes differ");
  const DoubleImage r = render.Cast<double>();
  return MaskedPhotometricLoss(r, crm.i_diff.Cast<double>(),
                               ValidTargetMask(masks.specular, crm.prop_valid),
                               cfg.lambda_dssim) +
         MaskedPhotometricLoss(r, crm.i_chro.Cast<double>(),
                               ValidTargetMask(masks.overexposed, crm.prop_valid),
                               cfg.lambda_dssim);
}

}  // namespace polargs
