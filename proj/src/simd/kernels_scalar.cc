#include <algorithm>
#include <cmath>
#include <limits>

#include "polargs/simd/kernels.h"

namespace polargs::simd::scalar {
namespace {

template <typename T>
void StokesImpl(const StokesArgs& a) {
  const T* i0 = static_cast<const T*>(a.i0);
  const T* i45 = static_cast<const T*>(a.i45);
  const T* i90 = static_cast<const T*>(a.i90);
  const T* i135 = static_cast<const T*>(a.i135);
  T* s0 = static_cast<T*>(a.s0);
  T* s1 = static_cast<T*>(a.s1);
  T* s2 = static_cast<T*>(a.s2);
  for (size_t i = 0; i < a.n; ++i) {
    const T t0 = i0[i] + i90[i];
    T t1 = i0[i] - i90[i];
    T t2 = i45[i] - i135[i];
    const T m2 = t1 * t1 + t2 * t2;
    if (m2 > t0 * t0) {
      const T scale = t0 / std::sqrt(m2);
      t1 = t1 * scale;
      t2 = t2 * scale;
    }
    s0[i] = t0;
    s1[i] = t1;
    s2[i] = t2;
  }
}

}  // namespace

void StokesF32(const StokesArgs& a) { StokesImpl<float>(a); }
void StokesF64(const StokesArgs& a) { StokesImpl<double>(a); }

void ConvRow(const ConvRowArgs& a) {
  for (size_t i = 0; i < a.n; ++i) {
    double acc = 0.0;
    for (size_t k = 0; k < a.ntaps; ++k) acc = acc + a.taps[k] * a.in[i + k];
    a.out[i] = acc;
  }
}

double MinSqDist(const MinSqDistArgs& a) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < a.n; ++i) {
    const double dx = a.xs[i] - a.qx;
    const double dy = a.ys[i] - a.qy;
    const double dz = a.zs[i] - a.qz;
    const double d = dx * dx + dy * dy + dz * dz;
    if (d < best) best = d;
  }
  return best;
}

void TsdfRow(const TsdfRowArgs& a) {
  const float wmax = static_cast<float>(a.width - 1);
  const float hmax = static_cast<float>(a.height - 1);
  for (size_t i = a.begin; i < a.n; ++i) {
    const float fi = static_cast<float>(i);
    const float px = a.p0[0] + fi * a.dp[0];
    const float py = a.p0[1] + fi * a.dp[1];
    const float pz = a.p0[2] + fi * a.dp[2];
    if (!(pz > 0.0f)) continue;
    const float uf = (px * a.fx) / pz + a.cx;
    const float vf = (py * a.fy) / pz + a.cy;
    if (!(uf >= 0.0f && uf <= wmax && vf >= 0.0f && vf <= hmax)) continue;
    // Bilinear when the four surrounding depths exist, nearest pixel otherwise.
    const float u0 = std::floor(uf), v0 = std::floor(vf);
    const float fu = uf - u0, fv = vf - v0;
    const int x0 = static_cast<int>(u0), y0 = static_cast<int>(v0);
    const int x1 = std::min(x0 + 1, a.width - 1), y1 = std::min(y0 + 1, a.height - 1);
    const float d00 = a.depth[y0 * a.width + x0], d10 = a.depth[y0 * a.width + x1];
    const float d01 = a.depth[y1 * a.width + x0], d11 = a.depth[y1 * a.width + x1];
    float d;
    if (d00 > 0.0f && d10 > 0.0f && d01 > 0.0f && d11 > 0.0f) {
      const float top = d00 + fu * (d10 - d00);
      const float bottom = d01 + fu * (d11 - d01);
      d = top + fv * (bottom - top);
    } else {
      const float u = std::floor(uf + 0.5f), v = std::floor(vf + 0.5f);
      d = a.depth[static_cast<int>(v) * a.width + static_cast<int>(u)];
    }
    if (!(d > 0.0f && d <= a.max_depth)) continue;
    const float sdf = d - pz;
    if (sdf < -a.truncation) continue;
    const float t = std::fmin(1.0f, sdf / a.truncation);
    const float w = a.weight[i];
    a.tsdf[i] = (a.tsdf[i] * w + t) / (w + 1.0f);
    a.weight[i] = w + 1.0f;
  }
}

}  // namespace polargs::simd::scalar
