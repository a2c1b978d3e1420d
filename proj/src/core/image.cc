#include "polargs/core/image.h"

#include <atomic>
#include <thread>

#include "polargs/core/parallel.h"

namespace polargs {
namespace {

std::atomic<int> g_threads{1};

}  // namespace

int NumThreads() { return g_threads.load(std::memory_order_relaxed); }

void SetNumThreads(int n) {
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  g_threads.store(n, std::memory_order_relaxed);
}

int CountNonZero(const Mask& mask) {
  int n = 0;
  for (uint8_t v : mask.samples()) n += v != 0;
  return n;
}

Mask MorphologicalOpen3x3(const Mask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  auto get = [&](const Mask& m, int x, int y) -> bool {
    return m.InBounds(x, y) && m.at(x, y) != 0;
  };
  Mask eroded(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool all = true;
      for (int dy = -1; dy <= 1 && all; ++dy) {
        for (int dx = -1; dx <= 1 && all; ++dx) all = get(mask, x + dx, y + dy);
      }
      eroded.at(x, y) = all ? 1 : 0;
    }
  }
  Mask opened(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool any = false;
      for (int dy = -1; dy <= 1 && !any; ++dy) {
        for (int dx = -1; dx <= 1 && !any; ++dx) any = get(eroded, x + dx, y + dy);
      }
      opened.at(x, y) = any ? 1 : 0;
    }
  }
  return opened;
}

}  // namespace polargs
