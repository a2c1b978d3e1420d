#include <atomic>
#include <cstdlib>
#include <string>

#include "polargs/core/error.h"
#include "polargs/simd/kernels.h"

namespace polargs::simd {
namespace {

bool CpuHasAvx2() {
#if defined(POLARGS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa DetectIsa() {
  Isa best = Isa::kScalar;
  if (IsaAvailable(Isa::kAvx2)) best = Isa::kAvx2;
  if (IsaAvailable(Isa::kNeon)) best = Isa::kNeon;
  if (const char* env = std::getenv("POLARGS_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && IsaAvailable(Isa::kAvx2)) return Isa::kAvx2;
    if (want == "neon" && IsaAvailable(Isa::kNeon)) return Isa::kNeon;
  }
  return best;
}

std::atomic<int>& IsaSlot() {
  static std::atomic<int> slot(static_cast<int>(DetectIsa()));
  return slot;
}

Isa Current() { return static_cast<Isa>(IsaSlot().load(std::memory_order_relaxed)); }

}  // namespace

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
    default:
      return "scalar";
  }
}

bool IsaAvailable(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return CpuHasAvx2();
    case Isa::kNeon:
#if defined(POLARGS_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa ActiveIsa() { return Current(); }

void SetIsa(Isa isa) {
  POLARGS_CHECK(IsaAvailable(isa), ErrorKind::kUnavailable,
                "simd: requested ISA is not available on this CPU");
  IsaSlot().store(static_cast<int>(isa), std::memory_order_relaxed);
}

void StokesF32(const StokesArgs& a) {
  switch (Current()) {
#if defined(POLARGS_HAVE_AVX2)
    case Isa::kAvx2:
      return avx2::StokesF32(a);
#endif
#if defined(POLARGS_HAVE_NEON)
    case Isa::kNeon:
      return neon::StokesF32(a);
#endif
    default:
      return scalar::StokesF32(a);
  }
}

void StokesF64(const StokesArgs& a) {
#if defined(POLARGS_HAVE_AVX2)
  if (Current() == Isa::kAvx2) return avx2::StokesF64(a);
#endif
  scalar::StokesF64(a);
}

void ConvRow(const ConvRowArgs& a) {
#if defined(POLARGS_HAVE_AVX2)
  if (Current() == Isa::kAvx2) return avx2::ConvRow(a);
#endif
  scalar::ConvRow(a);
}

double MinSqDist(const MinSqDistArgs& a) {
  switch (Current()) {
#if defined(POLARGS_HAVE_AVX2)
    case Isa::kAvx2:
      return avx2::MinSqDist(a);
#endif
#if defined(POLARGS_HAVE_NEON)
    case Isa::kNeon:
      return neon::MinSqDist(a);
#endif
    default:
      return scalar::MinSqDist(a);
  }
}

void TsdfRow(const TsdfRowArgs& a) {
#if defined(POLARGS_HAVE_AVX2)
  if (Current() == Isa::kAvx2) return avx2::TsdfRow(a);
#endif
  scalar::TsdfRow(a);
}

}  // namespace polargs::simd
