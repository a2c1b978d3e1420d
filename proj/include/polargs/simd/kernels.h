#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference in
// kernels_scalar.cc and optional AVX2 / NEON variants selected at runtime.
// All variants perform the same operations in the same order without FMA
// contraction, so their outputs agree bit for bit.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace polargs::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view IsaName(Isa isa);

// Best ISA supported by both the build and the running CPU, unless the
// POLARGS_SIMD environment variable ("scalar", "avx2", "neon") lowers it.
Isa ActiveIsa();
bool IsaAvailable(Isa isa);

// Forces an ISA for the current process (tests). Throws if unavailable.
void SetIsa(Isa isa);

// Stokes parameters from four analyzer-angle sample arrays, with the
// physical clamp s1^2 + s2^2 <= s0^2 applied by rescaling (s1, s2).
struct StokesArgs {
  size_t n;
  const void* i0;
  const void* i45;
  const void* i90;
  const void* i135;
  void* s0;
  void* s1;
  void* s2;
};

// Separable convolution, one row: out[i] = sum_k taps[k] * in[i + k] for
// i in [0, n). `in` holds n + ntaps - 1 samples.
struct ConvRowArgs {
  size_t n;
  const double* in;
  const double* taps;
  size_t ntaps;
  double* out;
};

// Squared distance from q to the nearest of n SoA points; returns +inf when
// n == 0.
struct MinSqDistArgs {
  double qx, qy, qz;
  const double* xs;
  const double* ys;
  const double* zs;
  size_t n;
};

// One x-row of TSDF voxels. Voxel i in [begin, n) has camera-frame position
// p0 + i * dp. Depth is interpolated bilinearly when all four surrounding
// pixels hold a depth, otherwise taken from the nearest pixel.
struct TsdfRowArgs {
  size_t n;
  size_t begin = 0;
  float p0[3];
  float dp[3];
  float fx, fy, cx, cy;
  int width, height;
  const float* depth;
  float truncation;
  float max_depth;
  float* tsdf;    // normalized to [-1, 1]
  float* weight;
};

namespace scalar {
void StokesF32(const StokesArgs& a);
void StokesF64(const StokesArgs& a);
void ConvRow(const ConvRowArgs& a);
double MinSqDist(const MinSqDistArgs& a);
void TsdfRow(const TsdfRowArgs& a);
}  // namespace scalar

#if defined(POLARGS_HAVE_AVX2)
namespace avx2 {
void StokesF32(const StokesArgs& a);
void StokesF64(const StokesArgs& a);
void ConvRow(const ConvRowArgs& a);
double MinSqDist(const MinSqDistArgs& a);
void TsdfRow(const TsdfRowArgs& a);
}  // namespace avx2
#endif

#if defined(POLARGS_HAVE_NEON)
namespace neon {
void StokesF32(const StokesArgs& a);
double MinSqDist(const MinSqDistArgs& a);
}  // namespace neon
#endif

// Dispatching entry points.
void StokesF32(const StokesArgs& a);
void StokesF64(const StokesArgs& a);
void ConvRow(const ConvRowArgs& a);
double MinSqDist(const MinSqDistArgs& a);
void TsdfRow(const TsdfRowArgs& a);

}  // namespace polargs::simd
