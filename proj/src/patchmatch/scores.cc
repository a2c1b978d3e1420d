#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "polargs/patchmatch/patchmatch.h"

namespace polargs {

double DolpWeight(double rho, double sigma) {
  const double s2 = 2.0 * sigma * sigma;
  return std::exp(-(1.0 - rho) * (1.0 - rho) / s2) + std::exp(-rho * rho / s2);
}

AzimuthScore ScoreAzimuth(const Eigen::Vector3d& n_star, const AngleSample& polar,
                          const PmConfig& cfg) {
  AzimuthScore out;
  if (!polar.valid) return out;
  const double phi = WrapFullTurn(std::atan2(n_star.y(), n_star.x()));
  const double omega = DolpWeight(polar.dolp, cfg.sigma);
  const auto branches = AolpCandidates(polar.aolp);
  out.score = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const double delta = WrapDifference(phi - branches[i]);
    const double s = omega * std::exp(delta * delta / cfg.tau);
    if (s < out.score) {
      out.score = s;
      out.branch = i;
      out.azimuth = branches[i];
    }
  }
  return out;
}

double ScoreNormalDepth(double d_star, const Eigen::Vector3d& n_star, const DepthMoments& m,
                        const CameraModel& cam, int x, int y) {
  if (!(d_star > 0.0) || m.count < 2) return 1.0;
  DepthMoments all = m;
  all.Add(BackprojectToCamera(cam, {double(x), double(y)}, d_star));
  const Eigen::Vector3d mean = all.sum / all.count;
  const Eigen::Matrix3d cov = all.outer / all.count - mean * mean.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  // Degenerate (collinear) neighbourhoods carry no plane.
  if (!(eig.eigenvalues()(1) > 1e-12 * eig.eigenvalues()(2))) return 1.0;
  Eigen::Vector3d c = eig.eigenvectors().col(0);
  if (c.dot(mean) > 0.0) c = -c;
  return 1.0 - CamToView(c).dot(n_star);
}

namespace {

int ReflectiveCount(const PmView& v, int x, int y, int half) {
  int count = 0;
  for (int qy = std::max(0, y - half); qy <= std::min(v.reflective.height() - 1, y + half); ++qy) {
    for (int qx = std::max(0, x - half); qx <= std::min(v.reflective.width() - 1, x + half);
         ++qx) {
      count += v.reflective.at(qx, qy) != 0;
    }
  }
  return count;
}

const FloatImage& NccImage(const PmView& v, bool use_crm) {
  return use_crm && !v.crm_gray.empty() ? v.crm_gray : v.gray;
}

}  // namespace

double ScorePhotometric(int x, int y, const Hypothesis& h, const ViewBundle& bundle,
                        const PmConfig& cfg) {
  if (bundle.sources.empty()) return 0.0;
  const PmView& ref = *bundle.ref;
  const int half = cfg.ncc_window / 2;
  const bool use_crm = !ref.crm_gray.empty() && !ref.reflective.empty() &&
                       ReflectiveCount(ref, x, y, half) > cfg.reflective_pixel_threshold;
  const FloatImage& ref_img = NccImage(ref, use_crm);

  const Eigen::Vector3d n = ViewToCam(h.normal);
  const Eigen::Vector3d x0 = BackprojectToCamera(ref.cam, {double(x), double(y)}, h.depth);
  const double rho0 = n.dot(x0);
  if (!(std::abs(rho0) > 1e-9)) return 2.0;

  struct Sample {
    Eigen::Vector3d point;  // on the hypothesis plane, reference camera frame
    double value;
    double weight;
  };
  std::vector<Sample> samples;
  samples.reserve(static_cast<size_t>(cfg.ncc_window) * cfg.ncc_window);
  const double center = ref_img.at(x, y);
  const double inv_s = 1.0 / (2.0 * cfg.ncc_sigma_spatial * cfg.ncc_sigma_spatial);
  const double inv_c = 1.0 / (2.0 * cfg.ncc_sigma_color * cfg.ncc_sigma_color);
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) {
      const int qx = x + dx, qy = y + dy;
      if (!ref_img.InBounds(qx, qy)) continue;
      const Eigen::Vector3d ray((qx - ref.cam.cx) / ref.cam.fx, (qy - ref.cam.cy) / ref.cam.fy,
                                1.0);
      const double denom = n.dot(ray);
      const double t = denom != 0.0 ? rho0 / denom : -1.0;
      if (!(t > 0.0)) return 2.0;
      const double v = ref_img.at(qx, qy);
      const double dc = v - center;
      samples.push_back({t * ray, v, std::exp(-(dx * dx + dy * dy) * inv_s - dc * dc * inv_c)});
    }
  }

  double wsum = 0.0, mr = 0.0;
  for (const Sample& s : samples) {
    wsum += s.weight;
    mr += s.weight * s.value;
  }
  mr /= wsum;
  double vr = 0.0;
  for (const Sample& s : samples) vr += s.weight * (s.value - mr) * (s.value - mr);
  vr /= wsum;

  double total = 0.0;
  std::vector<double> src_values(samples.size());
  for (const PmView* src : bundle.sources) {
    const Eigen::Matrix4d rel = RelativePose(ref.cam, src->cam);
    const Eigen::Matrix3d r = rel.topLeftCorner<3, 3>();
    const Eigen::Vector3d tr = rel.topRightCorner<3, 1>();
    const FloatImage& src_img = NccImage(*src, use_crm);
    bool inside = true;
    for (size_t k = 0; k < samples.size() && inside; ++k) {
      const Eigen::Vector3d q = r * samples[k].point + tr;
      if (!(q.z() > 0.0)) {
        inside = false;
        break;
      }
      const double u = src->cam.fx * q.x() / q.z() + src->cam.cx;
      const double v = src->cam.fy * q.y() / q.z() + src->cam.cy;
      inside = SampleBilinear(src_img, u, v, 0, &src_values[k]);
    }
    if (!inside) {
      total += 2.0;
      continue;
    }
    double ms = 0.0;
    for (size_t k = 0; k < samples.size(); ++k) ms += samples[k].weight * src_values[k];
    ms /= wsum;
    double vs = 0.0, cov = 0.0;
    for (size_t k = 0; k < samples.size(); ++k) {
      const double a = samples[k].value - mr, b = src_values[k] - ms;
      vs += samples[k].weight * b * b;
      cov += samples[k].weight * a * b;
    }
    vs /= wsum;
    cov /= wsum;
    constexpr double kMinVariance = 1e-10;
    if (vr < kMinVariance || vs < kMinVariance) {
      total += 1.0;
      continue;
    }
    const double ncc = std::clamp(cov / std::sqrt(vr * vs), -1.0, 1.0);
    total += 1.0 - ncc;
  }
  return total / bundle.sources.size();
}

namespace {

AngleSample PolarAt(const PolarMaps& polar, int x, int y) {
  return {polar.aolp.at(x, y), polar.dolp.at(x, y), polar.valid.at(x, y) != 0};
}

double AzimuthTerm(int x, int y, const Hypothesis& h, const ViewBundle& bundle,
                   const PmConfig& cfg) {
  const PmView& ref = *bundle.ref;
  const AzimuthScore s = ScoreAzimuth(h.normal, PolarAt(ref.polar, x, y), cfg);
  if (!cfg.multi_view_azimuth) return s.score;
  double sum = s.score;
  int count = 1;
  const Eigen::Vector3d pw = ref.cam.CamToWorld(
      BackprojectToCamera(ref.cam, {double(x), double(y)}, h.depth));
  const Eigen::Vector3d nw = ref.cam.rotation().transpose() * ViewToCam(h.normal);
  for (const PmView* src : bundle.sources) {
    const Eigen::Vector3d pc = src->cam.WorldToCam(pw);
    if (!(pc.z() > 0.0)) continue;
    const int u = static_cast<int>(std::lround(src->cam.fx * pc.x() / pc.z() + src->cam.cx));
    const int v = static_cast<int>(std::lround(src->cam.fy * pc.y() / pc.z() + src->cam.cy));
    if (!src->polar.valid.InBounds(u, v)) continue;
    const Eigen::Vector3d n_src = CamToView(src->cam.rotation() * nw);
    sum += ScoreAzimuth(n_src, PolarAt(src->polar, u, v), cfg).score;
    ++count;
  }
  return sum / count;
}

}  // namespace

double HypothesisCost(int x, int y, const Hypothesis& h, const HypothesisField& field,
                      const ViewBundle& bundle, const PmConfig& cfg) {
  double cost = ScorePhotometric(x, y, h, bundle, cfg);
  if (cfg.lambda1 != 0.0) cost += cfg.lambda1 * AzimuthTerm(x, y, h, bundle, cfg);
  if (cfg.lambda2 != 0.0) {
    cost += cfg.lambda2 * ScoreNormalDepth(h.depth, h.normal, field.nd_moments[field.index(x, y)],
                                           bundle.ref->cam, x, y);
  }
  return cost;
}

}  // namespace polargs
