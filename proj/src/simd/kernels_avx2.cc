#include <immintrin.h>

#include <cmath>
#include <limits>

#include "polargs/simd/kernels.h"

namespace polargs::simd::avx2 {

void StokesF32(const StokesArgs& a) {
  const float* i0 = static_cast<const float*>(a.i0);
  const float* i45 = static_cast<const float*>(a.i45);
  const float* i90 = static_cast<const float*>(a.i90);
  const float* i135 = static_cast<const float*>(a.i135);
  float* s0 = static_cast<float*>(a.s0);
  float* s1 = static_cast<float*>(a.s1);
  float* s2 = static_cast<float*>(a.s2);
  size_t i = 0;
  for (; i + 8 <= a.n; i += 8) {
    const __m256 v0 = _mm256_loadu_ps(i0 + i);
    const __m256 v45 = _mm256_loadu_ps(i45 + i);
    const __m256 v90 = _mm256_loadu_ps(i90 + i);
    const __m256 v135 = _mm256_loadu_ps(i135 + i);
    const __m256 t0 = _mm256_add_ps(v0, v90);
    __m256 t1 = _mm256_sub_ps(v0, v90);
    __m256 t2 = _mm256_sub_ps(v45, v135);
    const __m256 m2 = _mm256_add_ps(_mm256_mul_ps(t1, t1), _mm256_mul_ps(t2, t2));
    const __m256 over = _mm256_cmp_ps(m2, _mm256_mul_ps(t0, t0), _CMP_GT_OQ);
    const __m256 scale = _mm256_div_ps(t0, _mm256_sqrt_ps(m2));
    t1 = _mm256_blendv_ps(t1, _mm256_mul_ps(t1, scale), over);
    t2 = _mm256_blendv_ps(t2, _mm256_mul_ps(t2, scale), over);
    _mm256_storeu_ps(s0 + i, t0);
    _mm256_storeu_ps(s1 + i, t1);
    _mm256_storeu_ps(s2 + i, t2);
  }
  if (i < a.n) {
    StokesArgs tail{a.n - i, i0 + i, i45 + i, i90 + i, i135 + i,
                    s0 + i,  s1 + i, s2 + i};
    scalar::StokesF32(tail);
  }
}

void StokesF64(const StokesArgs& a) {
  const double* i0 = static_cast<const double*>(a.i0);
  const double* i45 = static_cast<const double*>(a.i45);
  const double* i90 = static_cast<const double*>(a.i90);
  const double* i135 = static_cast<const double*>(a.i135);
  double* s0 = static_cast<double*>(a.s0);
  double* s1 = static_cast<double*>(a.s1);
  double* s2 = static_cast<double*>(a.s2);
  size_t i = 0;
  for (; i + 4 <= a.n; i += 4) {
    const __m256d v0 = _mm256_loadu_pd(i0 + i);
    const __m256d v45 = _mm256_loadu_pd(i45 + i);
    const __m256d v90 = _mm256_loadu_pd(i90 + i);
    const __m256d v135 = _mm256_loadu_pd(i135 + i);
    const __m256d t0 = _mm256_add_pd(v0, v90);
    __m256d t1 = _mm256_sub_pd(v0, v90);
    __m256d t2 = _mm256_sub_pd(v45, v135);
    const __m256d m2 = _mm256_add_pd(_mm256_mul_pd(t1, t1), _mm256_mul_pd(t2, t2));
    const __m256d over = _mm256_cmp_pd(m2, _mm256_mul_pd(t0, t0), _CMP_GT_OQ);
    const __m256d scale = _mm256_div_pd(t0, _mm256_sqrt_pd(m2));
    t1 = _mm256_blendv_pd(t1, _mm256_mul_pd(t1, scale), over);
    t2 = _mm256_blendv_pd(t2, _mm256_mul_pd(t2, scale), over);
    _mm256_storeu_pd(s0 + i, t0);
    _mm256_storeu_pd(s1 + i, t1);
    _mm256_storeu_pd(s2 + i, t2);
  }
  if (i < a.n) {
    StokesArgs tail{a.n - i, i0 + i, i45 + i, i90 + i, i135 + i,
                    s0 + i,  s1 + i, s2 + i};
    scalar::StokesF64(tail);
  }
}

void ConvRow(const ConvRowArgs& a) {
  size_t i = 0;
  for (; i + 4 <= a.n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (size_t k = 0; k < a.ntaps; ++k) {
      const __m256d t = _mm256_set1_pd(a.taps[k]);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(t, _mm256_loadu_pd(a.in + i + k)));
    }
    _mm256_storeu_pd(a.out + i, acc);
  }
  if (i < a.n) {
    ConvRowArgs tail{a.n - i, a.in + i, a.taps, a.ntaps, a.out + i};
    scalar::ConvRow(tail);
  }
}

double MinSqDist(const MinSqDistArgs& a) {
  const __m256d qx = _mm256_set1_pd(a.qx);
  const __m256d qy = _mm256_set1_pd(a.qy);
  const __m256d qz = _mm256_set1_pd(a.qz);
  __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  size_t i = 0;
  for (; i + 4 <= a.n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(a.xs + i), qx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(a.ys + i), qy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(a.zs + i), qz);
    const __m256d d = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
        _mm256_mul_pd(dz, dz));
    best = _mm256_min_pd(best, d);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, best);
  double out = lanes[0];
  for (int k = 1; k < 4; ++k) out = lanes[k] < out ? lanes[k] : out;
  MinSqDistArgs tail = a;
  tail.xs += i;
  tail.ys += i;
  tail.zs += i;
  tail.n -= i;
  const double rest = scalar::MinSqDist(tail);
  return rest < out ? rest : out;
}

void TsdfRow(const TsdfRowArgs& a) {
  const __m256 lane = _mm256_setr_ps(0, 1, 2, 3, 4, 5, 6, 7);
  const __m256 p0x = _mm256_set1_ps(a.p0[0]);
  const __m256 p0y = _mm256_set1_ps(a.p0[1]);
  const __m256 p0z = _mm256_set1_ps(a.p0[2]);
  const __m256 dpx = _mm256_set1_ps(a.dp[0]);
  const __m256 dpy = _mm256_set1_ps(a.dp[1]);
  const __m256 dpz = _mm256_set1_ps(a.dp[2]);
  const __m256 fx = _mm256_set1_ps(a.fx);
  const __m256 fy = _mm256_set1_ps(a.fy);
  const __m256 cx = _mm256_set1_ps(a.cx);
  const __m256 cy = _mm256_set1_ps(a.cy);
  const __m256 half = _mm256_set1_ps(0.5f);
  const __m256 zero = _mm256_setzero_ps();
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 wmax = _mm256_set1_ps(static_cast<float>(a.width - 1));
  const __m256 hmax = _mm256_set1_ps(static_cast<float>(a.height - 1));
  const __m256 trunc = _mm256_set1_ps(a.truncation);
  const __m256 ntrunc = _mm256_set1_ps(-a.truncation);
  const __m256 maxd = _mm256_set1_ps(a.max_depth);
  const __m256i width = _mm256_set1_epi32(a.width);
  const __m256i wlast = _mm256_set1_epi32(a.width - 1);
  const __m256i hlast = _mm256_set1_epi32(a.height - 1);
  const __m256i ione = _mm256_set1_epi32(1);

  size_t i = a.begin;
  for (; i + 8 <= a.n; i += 8) {
    const __m256 fi = _mm256_add_ps(_mm256_set1_ps(static_cast<float>(i)), lane);
    const __m256 px = _mm256_add_ps(p0x, _mm256_mul_ps(fi, dpx));
    const __m256 py = _mm256_add_ps(p0y, _mm256_mul_ps(fi, dpy));
    const __m256 pz = _mm256_add_ps(p0z, _mm256_mul_ps(fi, dpz));
    __m256 ok = _mm256_cmp_ps(pz, zero, _CMP_GT_OQ);
    if (_mm256_testz_ps(ok, ok)) continue;
    const __m256 uf = _mm256_add_ps(_mm256_div_ps(_mm256_mul_ps(px, fx), pz), cx);
    const __m256 vf = _mm256_add_ps(_mm256_div_ps(_mm256_mul_ps(py, fy), pz), cy);
    ok = _mm256_and_ps(ok, _mm256_cmp_ps(uf, zero, _CMP_GE_OQ));
    ok = _mm256_and_ps(ok, _mm256_cmp_ps(uf, wmax, _CMP_LE_OQ));
    ok = _mm256_and_ps(ok, _mm256_cmp_ps(vf, zero, _CMP_GE_OQ));
    ok = _mm256_and_ps(ok, _mm256_cmp_ps(vf, hmax, _CMP_LE_OQ));
    if (_mm256_testz_ps(ok, ok)) continue;
    // Masked-off lanes read pixel 0 so every gather stays in bounds.
    const __m256 u0 = _mm256_and_ps(_mm256_floor_ps(uf), ok);
    const __m256 v0 = _mm256_and_ps(_mm256_floor_ps(vf), ok);
    const __m256 fu = _mm256_sub_ps(uf, _mm256_floor_ps(uf));
    const __m256 fv = _mm256_sub_ps(vf, _mm256_floor_ps(vf));
    const __m256i x0 = _mm256_cvttps_epi32(u0), y0 = _mm256_cvttps_epi32(v0);
    const __m256i x1 = _mm256_min_epi32(_mm256_add_epi32(x0, ione), wlast);
    const __m256i y1 = _mm256_min_epi32(_mm256_add_epi32(y0, ione), hlast);
    const __m256i r0 = _mm256_mullo_epi32(y0, width), r1 = _mm256_mullo_epi32(y1, width);
    const __m256 d00 = _mm256_mask_i32gather_ps(zero, a.depth, _mm256_add_epi32(r0, x0), ok, 4);
    const __m256 d10 = _mm256_mask_i32gather_ps(zero, a.depth, _mm256_add_epi32(r0, x1), ok, 4);
    const __m256 d01 = _mm256_mask_i32gather_ps(zero, a.depth, _mm256_add_epi32(r1, x0), ok, 4);
    const __m256 d11 = _mm256_mask_i32gather_ps(zero, a.depth, _mm256_add_epi32(r1, x1), ok, 4);
    const __m256 top = _mm256_add_ps(d00, _mm256_mul_ps(fu, _mm256_sub_ps(d10, d00)));
    const __m256 bottom = _mm256_add_ps(d01, _mm256_mul_ps(fu, _mm256_sub_ps(d11, d01)));
    const __m256 bilinear = _mm256_add_ps(top, _mm256_mul_ps(fv, _mm256_sub_ps(bottom, top)));
    const __m256 full = _mm256_and_ps(
        _mm256_and_ps(_mm256_cmp_ps(d00, zero, _CMP_GT_OQ), _mm256_cmp_ps(d10, zero, _CMP_GT_OQ)),
        _mm256_and_ps(_mm256_cmp_ps(d01, zero, _CMP_GT_OQ), _mm256_cmp_ps(d11, zero, _CMP_GT_OQ)));
    const __m256 un = _mm256_and_ps(_mm256_floor_ps(_mm256_add_ps(uf, half)), ok);
    const __m256 vn = _mm256_and_ps(_mm256_floor_ps(_mm256_add_ps(vf, half)), ok);
    const __m256i nidx = _mm256_add_epi32(_mm256_mullo_epi32(_mm256_cvttps_epi32(vn), width),
                                          _mm256_cvttps_epi32(un));
    const __m256 nearest = _mm256_mask_i32gather_ps(zero, a.depth, nidx, ok, 4);
    const __m256 d = _mm256_blendv_ps(nearest, bilinear, full);
    ok = _mm256_and_ps(ok, _mm256_cmp_ps(d, zero, _CMP_GT_OQ));
    ok = _mm256_and_ps(ok, _mm256_cmp_ps(d, maxd, _CMP_LE_OQ));
    const __m256 sdf = _mm256_sub_ps(d, pz);
    ok = _mm256_and_ps(ok, _mm256_cmp_ps(sdf, ntrunc, _CMP_GE_OQ));
    if (_mm256_testz_ps(ok, ok)) continue;
    const __m256 t = _mm256_min_ps(one, _mm256_div_ps(sdf, trunc));
    const __m256 w = _mm256_loadu_ps(a.weight + i);
    const __m256 old = _mm256_loadu_ps(a.tsdf + i);
    const __m256 wn = _mm256_add_ps(w, one);
    const __m256 fused = _mm256_div_ps(_mm256_add_ps(_mm256_mul_ps(old, w), t), wn);
    _mm256_storeu_ps(a.tsdf + i, _mm256_blendv_ps(old, fused, ok));
    _mm256_storeu_ps(a.weight + i, _mm256_blendv_ps(w, wn, ok));
  }
  if (i < a.n) {
    TsdfRowArgs tail = a;
    tail.begin = i;
    scalar::TsdfRow(tail);
  }
}

}  // namespace polargs::simd::avx2
