#pragma once

#include "polargs/core/image.h"

namespace polargs {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Reflect-101 index into [0, n): ... 2 1 | 0 1 2 ... n-1 | n-2 ...
int MirrorIndex(int i, int n);

// Per-pixel, per-channel SSIM with an 11x11 Gaussian window and mirrored
// borders.
DoubleImage SsimMap(const DoubleImage& a, const DoubleImage& b);

// (1 - mean SSIM) / 2 over the whole image. Throws kDimension for shape
// mismatch or images smaller than the window.
double Dssim(const FloatImage& a, const FloatImage& b);

// D-SSIM averaged over the pixels of `mask` (all channels). The SSIM map is
// computed on the mask bounding box with mirrored borders, so pixels outside
// the box never influence the value. Returns 0 for an empty mask. When
// `grad_a` is given it receives dD/da (full image size, zero outside the box).
double MaskedDssim(const DoubleImage& a, const DoubleImage& b, const Mask& mask,
                   DoubleImage* grad_a = nullptr);

}  // namespace polargs
