#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace polargs {

int NumThreads();
void SetNumThreads(int n);  // n <= 0 selects hardware concurrency

// Splits [begin, end) into contiguous chunks, one per worker. `fn(i)` must not
// write state shared with other indices.
template <typename Fn>
void ParallelFor(int64_t begin, int64_t end, Fn&& fn) {
  const int64_t n = end - begin;
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<int64_t>(NumThreads(), n));
  if (workers <= 1) {
    for (int64_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int64_t lo = begin + w * chunk;
    const int64_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Counter-based random numbers: the value depends only on (seed, keys), never
// on evaluation order.
inline uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t HashKeys(uint64_t seed, uint64_t a, uint64_t b = 0,
                         uint64_t c = 0, uint64_t d = 0) {
  uint64_t h = Mix64(seed);
  h = Mix64(h ^ a);
  h = Mix64(h ^ b);
  h = Mix64(h ^ c);
  h = Mix64(h ^ d);
  return h;
}

// Uniform double in [0, 1).
inline double UnitFromHash(uint64_t h) {
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

inline double HashUniform(uint64_t seed, uint64_t a, uint64_t b = 0,
                          uint64_t c = 0, uint64_t d = 0) {
  return UnitFromHash(HashKeys(seed, a, b, c, d));
}

}  // namespace polargs
