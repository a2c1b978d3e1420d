#pragma once

#include "polargs/core/image.h"
#include "polargs/core/stokes.h"

namespace polargs {

struct CorrectionConfig {
  double dolp_spec_min = 0.3;
  double dolp_over_max = 0.1;
  double intensity_min = 160.0 / 255.0;
  double mahalanobis_max = 0.8;
  double rho_d = 1.0;
  int search_radius = 64;
  double lambda_dssim = 0.2;
  int reflective_pixel_threshold = 30;  // per NCC window, see patchmatch

  void Validate() const;  // throws kConfig
};

struct ReflectiveMasks {
  Mask specular;
  Mask overexposed;
  Mask non_reflective;  // foreground minus both reflective masks
};

struct CrmSet {
  FloatImage pri;      // H x W
  FloatImage i_diff;   // H x W x 3
  FloatImage i_chro;   // H x W x 3
  FloatImage i_prop;   // H x W x 3
  Mask prop_valid;
};

// Thresholds DoLP and the max-channel intensity, then opens both masks with a
// 3x3 kernel. `foreground` may be empty (everything counts).
ReflectiveMasks LocalizeReflective(const PolarMaps& polar, const FloatImage& intensity,
                                   const CorrectionConfig& cfg, const Mask& foreground = {});

// Angle-averaged max(R,G,B) - min(R,G,B).
FloatImage ComputePri(const PolarizedCapture& capture);

// (s0 - A) / 2 per channel, A = sqrt(s1^2 + s2^2) being the peak-to-peak
// amplitude of the Malus sinusoid; clamped at 0.
FloatImage ComputeIdiff(const StokesImage& stokes);

struct Propagation {
  FloatImage i_prop;
  Mask prop_valid;
};

// Copies I_diff from the nearest non-reflective pixel (square rings of growing
// radius, row-major within a ring) whose PRI Mahalanobis distance is below the
// threshold. Throws kUnavailable when no non-reflective pixel exists.
Propagation PropagateDiffuse(const FloatImage& i_diff, const FloatImage& pri,
                             const ReflectiveMasks& masks, const CorrectionConfig& cfg);

// rho_d * I_prop / (sum_c I_prop + mean_c I_diff), denominator guarded.
FloatImage ComputeIchro(const FloatImage& i_prop, const FloatImage& i_diff,
                        const CorrectionConfig& cfg);

// All of the above for one capture.
CrmSet BuildCrms(const PolarizedCapture& capture, const ReflectiveMasks& masks,
                 const CorrectionConfig& cfg);

// (1 - lambda) * mean |a - b| + lambda * D-SSIM, both over the pixels of
// `mask`. Optionally accumulates (+=) the gradient w.r.t. `a` into `grad_a`,
// scaled by `weight`; the L1 subgradient at zero residual is 0.
double MaskedPhotometricLoss(const DoubleImage& a, const DoubleImage& b, const Mask& mask,
                             double lambda_dssim, DoubleImage* grad_a = nullptr,
                             double weight = 1.0);

// Valid reflective pixels of one kind: mask AND prop_valid.
Mask ValidTargetMask(const Mask& mask, const Mask& prop_valid);

// (1 - lambda) L1 + lambda D-SSIM over the specular mask against I_diff, plus
// the same over the overexposed mask against I_chro. Pixels without a
// propagation donor are excluded from both.
double ReflectiveLoss(const FloatImage& render, const CrmSet& crm,
                      const ReflectiveMasks& masks, const CorrectionConfig& cfg);

}  // namespace polargs
