#include <arm_neon.h>

#include <limits>

#include "polargs/simd/kernels.h"

namespace polargs::simd::neon {

void StokesF32(const StokesArgs& a) {
  const float* i0 = static_cast<const float*>(a.i0);
  const float* i45 = static_cast<const float*>(a.i45);
  const float* i90 = static_cast<const float*>(a.i90);
  const float* i135 = static_cast<const float*>(a.i135);
  float* s0 = static_cast<float*>(a.s0);
  float* s1 = static_cast<float*>(a.s1);
  float* s2 = static_cast<float*>(a.s2);
  size_t i = 0;
  for (; i + 4 <= a.n; i += 4) {
    const float32x4_t v0 = vld1q_f32(i0 + i);
    const float32x4_t v90 = vld1q_f32(i90 + i);
    const float32x4_t t0 = vaddq_f32(v0, v90);
    float32x4_t t1 = vsubq_f32(v0, v90);
    float32x4_t t2 = vsubq_f32(vld1q_f32(i45 + i), vld1q_f32(i135 + i));
    const float32x4_t m2 = vaddq_f32(vmulq_f32(t1, t1), vmulq_f32(t2, t2));
    const uint32x4_t over = vcgtq_f32(m2, vmulq_f32(t0, t0));
    const float32x4_t scale = vdivq_f32(t0, vsqrtq_f32(m2));
    t1 = vbslq_f32(over, vmulq_f32(t1, scale), t1);
    t2 = vbslq_f32(over, vmulq_f32(t2, scale), t2);
    vst1q_f32(s0 + i, t0);
    vst1q_f32(s1 + i, t1);
    vst1q_f32(s2 + i, t2);
  }
  if (i < a.n) {
    StokesArgs tail{a.n - i, i0 + i, i45 + i, i90 + i, i135 + i,
                    s0 + i,  s1 + i, s2 + i};
    scalar::StokesF32(tail);
  }
}

double MinSqDist(const MinSqDistArgs& a) {
  const float64x2_t qx = vdupq_n_f64(a.qx);
  const float64x2_t qy = vdupq_n_f64(a.qy);
  const float64x2_t qz = vdupq_n_f64(a.qz);
  float64x2_t best = vdupq_n_f64(std::numeric_limits<double>::infinity());
  size_t i = 0;
  for (; i + 2 <= a.n; i += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(a.xs + i), qx);
    const float64x2_t dy = vsubq_f64(vld1q_f64(a.ys + i), qy);
    const float64x2_t dz = vsubq_f64(vld1q_f64(a.zs + i), qz);
    const float64x2_t d =
        vaddq_f64(vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy)), vmulq_f64(dz, dz));
    best = vminq_f64(best, d);
  }
  double out = vminvq_f64(best);
  MinSqDistArgs tail = a;
  tail.xs += i;
  tail.ys += i;
  tail.zs += i;
  tail.n -= i;
  const double rest = scalar::MinSqDist(tail);
  return rest < out ? rest : out;
}

}  // namespace polargs::simd::neon
