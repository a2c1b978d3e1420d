#include "polargs/correction/ssim.h"

#include <array>
#include <cmath>
#include <vector>

#include "polargs/simd/kernels.h"

namespace polargs {
namespace {

constexpr int kRadius = kSsimWindow / 2;

const std::array<double, kSsimWindow>& GaussianTaps() {
  static const std::array<double, kSsimWindow> taps = [] {
    std::array<double, kSsimWindow> t{};
    double sum = 0.0;
    for (int k = 0; k < kSsimWindow; ++k) {
      const double d = k - kRadius;
      t[k] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
      sum += t[k];
    }
    for (double& v : t) v /= sum;
    return t;
  }();
  return taps;
}

using Plane = std::vector<double>;

// Separable Gaussian blur of a w x h plane with mirrored borders.
Plane Blur(const Plane& in, int w, int h) {
  const auto& taps = GaussianTaps();
  Plane tmp(in.size()), out(in.size());
  std::vector<double> padded(std::max(w, h) + 2 * kRadius), line(std::max(w, h));
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < w + 2 * kRadius; ++i) {
      padded[i] = in[static_cast<size_t>(y) * w + MirrorIndex(i - kRadius, w)];
    }
    simd::ConvRow({static_cast<size_t>(w), padded.data(), taps.data(), taps.size(),
                   tmp.data() + static_cast<size_t>(y) * w});
  }
  for (int x = 0; x < w; ++x) {
    for (int i = 0; i < h + 2 * kRadius; ++i) {
      padded[i] = tmp[static_cast<size_t>(MirrorIndex(i - kRadius, h)) * w + x];
    }
    simd::ConvRow({static_cast<size_t>(h), padded.data(), taps.data(), taps.size(),
                   line.data()});
    for (int y = 0; y < h; ++y) out[static_cast<size_t>(y) * w + x] = line[y];
  }
  return out;
}

// Adjoint of Blur.
Plane BlurAdjoint(const Plane& g, int w, int h) {
  const auto& taps = GaussianTaps();
  Plane tmp(g.size(), 0.0), out(g.size(), 0.0);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      const double v = g[static_cast<size_t>(y) * w + x];
      for (int k = 0; k < kSsimWindow; ++k) {
        tmp[static_cast<size_t>(MirrorIndex(y + k - kRadius, h)) * w + x] += taps[k] * v;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    const size_t row = static_cast<size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const double v = tmp[row + x];
      for (int k = 0; k < kSsimWindow; ++k) {
        out[row + MirrorIndex(x + k - kRadius, w)] += taps[k] * v;
      }
    }
  }
  return out;
}

struct SsimTerms {
  Plane mx, my, sxx, syy, sxy;
};

SsimTerms Moments(const Plane& x, const Plane& y, int w, int h) {
  Plane xx(x.size()), yy(x.size()), xy(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  SsimTerms t{Blur(x, w, h), Blur(y, w, h), Blur(xx, w, h), Blur(yy, w, h), Blur(xy, w, h)};
  for (size_t i = 0; i < x.size(); ++i) {
    t.sxx[i] -= t.mx[i] * t.mx[i];
    t.syy[i] -= t.my[i] * t.my[i];
    t.sxy[i] -= t.mx[i] * t.my[i];
  }
  return t;
}

double SsimAt(const SsimTerms& t, size_t i) {
  const double n1 = 2.0 * t.mx[i] * t.my[i] + kSsimC1;
  const double n2 = 2.0 * t.sxy[i] + kSsimC2;
  const double d1 = t.mx[i] * t.mx[i] + t.my[i] * t.my[i] + kSsimC1;
  const double d2 = t.sxx[i] + t.syy[i] + kSsimC2;
  return (n1 * n2) / (d1 * d2);
}

Plane ExtractChannel(const DoubleImage& img, int x0, int y0, int w, int h, int c) {
  Plane p(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) p[static_cast<size_t>(y) * w + x] = img.at(x0 + x, y0 + y, c);
  }
  return p;
}

}  // namespace

int MirrorIndex(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  int r = i % period;
  if (r < 0) r += period;
  return r < n ? r : period - r;
}

DoubleImage SsimMap(const DoubleImage& a, const DoubleImage& b) {
  POLARGS_CHECK(a.SameShape(b), ErrorKind::kDimension, "ssim: image shapes differ");
  const int w = a.width(), h = a.height();
  DoubleImage out(w, h, a.channels());
  for (int c = 0; c < a.channels(); ++c) {
    const SsimTerms t =
        Moments(ExtractChannel(a, 0, 0, w, h, c), ExtractChannel(b, 0, 0, w, h, c), w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(x, y, c) = SsimAt(t, static_cast<size_t>(y) * w + x);
    }
  }
  return out;
}

double Dssim(const FloatImage& a, const FloatImage& b) {
  POLARGS_CHECK(a.SameShape(b), ErrorKind::kDimension, "dssim: image shapes differ");
  POLARGS_CHECK(a.width() >= kSsimWindow && a.height() >= kSsimWindow,
                ErrorKind::kDimension, "dssim: image smaller than the SSIM window");
  const DoubleImage map = SsimMap(a.Cast<double>(), b.Cast<double>());
  double sum = 0.0;
  for (double v : map.samples()) sum += v;
  return (1.0 - sum / static_cast<double>(map.size())) / 2.0;
}

double MaskedDssim(const DoubleImage& a, const DoubleImage& b, const Mask& mask,
                   DoubleImage* grad_a) {
  POLARGS_CHECK(a.SameShape(b) && mask.SameSize(a), ErrorKind::kDimension,
                "masked dssim: size mismatch");
  if (grad_a) *grad_a = DoubleImage(a.width(), a.height(), a.channels());
  int x0 = a.width(), y0 = a.height(), x1 = -1, y1 = -1;
  size_t count = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
      ++count;
    }
  }
  if (count == 0) return 0.0;
  const int w = x1 - x0 + 1, h = y1 - y0 + 1;
  const double norm = 1.0 / (static_cast<double>(count) * a.channels());
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const Plane xa = ExtractChannel(a, x0, y0, w, h, c);
    const Plane xb = ExtractChannel(b, x0, y0, w, h, c);
    const SsimTerms t = Moments(xa, xb, w, h);
    Plane ga, gb, gc;
    if (grad_a) ga.assign(xa.size(), 0.0), gb.assign(xa.size(), 0.0), gc.assign(xa.size(), 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!mask.at(x0 + x, y0 + y)) continue;
        const size_t i = static_cast<size_t>(y) * w + x;
        const double s = SsimAt(t, i);
        total += (1.0 - s) / 2.0;
        if (!grad_a) continue;
        const double n1 = 2.0 * t.mx[i] * t.my[i] + kSsimC1;
        const double n2 = 2.0 * t.sxy[i] + kSsimC2;
        const double d1 = t.mx[i] * t.mx[i] + t.my[i] * t.my[i] + kSsimC1;
        const double d2 = t.sxx[i] + t.syy[i] + kSsimC2;
        const double ds_dmx = 2.0 * t.my[i] * n2 / (d1 * d2) - s * 2.0 * t.mx[i] / d1;
        const double ds_dsxx = -s / d2;
        const double ds_dsxy = 2.0 * n1 / (d1 * d2);
        const double g = -0.5 * norm;
        ga[i] = g * (ds_dmx - 2.0 * t.mx[i] * ds_dsxx - t.my[i] * ds_dsxy);
        gb[i] = g * ds_dsxx;
        gc[i] = g * ds_dsxy;
      }
    }
    if (!grad_a) continue;
    const Plane pa = BlurAdjoint(ga, w, h);
    const Plane pb = BlurAdjoint(gb, w, h);
    const Plane pc = BlurAdjoint(gc, w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const size_t i = static_cast<size_t>(y) * w + x;
        grad_a->at(x0 + x, y0 + y, c) = pa[i] + 2.0 * xa[i] * pb[i] + xb[i] * pc[i];
      }
    }
  }
  return total * norm;
}

}  // namespace polargs
