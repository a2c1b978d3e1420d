#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "polargs/core/camera.h"
#include "polargs/core/image.h"
#include "polargs/core/stokes.h"
#include "polargs/splat/gaussian.h"

namespace polargs {

struct PmConfig {
  double tau = 0.1;
  double sigma = 0.5;
  double lambda1 = 0.2;
  double lambda2 = 0.05;
  int ncc_window = 11;
  int nd_window = 11;  // neighbourhood of the depth-gradient normal in S_nd
  double ncc_sigma_spatial = 3.0;
  double ncc_sigma_color = 0.1;
  int sweeps = 3;
  double perturb_rel = 0.05;
  double perturb_angle = 0.1;  // radians, normal part of the refinement step
  double geo_px_thresh = 1.0;
  double geo_depth_rel_thresh = 0.01;
  double polar_eps_thresh = 0.2;
  int min_consistent_views = 2;
  bool multi_view_azimuth = false;
  int reflective_pixel_threshold = 30;
  // Candidates-only mode: no neighbour propagation and no perturbation.
  bool propagate_neighbors = true;
  bool refine_perturbation = true;
  uint64_t seed = 7;

  void Validate() const;  // throws kConfig
};

// Per-view inputs. Normals are view-frame unit vectors (see CamToView).
struct PmView {
  int view_id = 0;
  CameraModel cam;
  FloatImage gray;       // intensity used for NCC, H x W
  FloatImage crm_gray;   // optional correction-map intensity, H x W
  Mask reflective;       // optional; windows with many such pixels use crm_gray
  PolarMaps polar;
  FloatImage init_depth;   // 0 = missing
  FloatImage init_normal;  // H x W x 3, zero = missing
  Mask foreground;
};

// Channel mean of an H x W x 3 image.
FloatImage GrayImage(const FloatImage& rgb);

// View inputs from a capture: NCC intensity is the channel mean of s0 / 2.
PmView MakePmView(const PolarizedCapture& capture, const FloatImage& init_depth,
                  const FloatImage& init_normal, const Mask& foreground);

struct ViewBundle {
  const PmView* ref = nullptr;
  std::vector<const PmView*> sources;
};

// Moments of the back-projected observed initial depths around a pixel,
// centre excluded (camera frame).
struct DepthMoments {
  int count = 0;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d outer = Eigen::Matrix3d::Zero();

  void Add(const Eigen::Vector3d& p) {
    ++count;
    sum += p;
    outer += p * p.transpose();
  }
};

struct Hypothesis {
  double depth = 0.0;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
};

struct HypothesisField {
  int width = 0;
  int height = 0;
  std::vector<std::vector<Hypothesis>> candidates;  // InitHypotheses order
  std::vector<Hypothesis> best;
  std::vector<double> cost;
  Mask valid;  // pixels carrying hypotheses (foreground)
  std::vector<DepthMoments> nd_moments;

  size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
  FloatImage DepthMap() const;   // 0 where invalid
  FloatImage NormalMap() const;  // zero where invalid
  FloatImage CostMap() const;
};

// {phi - pi/2, phi, phi + pi/2, phi + pi} wrapped to [0, 2 pi).
std::array<double, 4> AolpCandidates(double phi);

// (sin t cos p, sin t sin p, cos t).
Eigen::Vector3d NormalFromAolp(double phi, double theta);

// Zenith of a view-frame normal clamped to [0, pi/2 - 1e-3]; pi/4 when the
// normal is missing.
double HypothesisZenith(const Eigen::Vector3d& n);

// (d, n), (d', n), (d, n_1..4), (d', n_1..4) per foreground pixel.
// Throws kData when the view has no valid initial depth.
HypothesisField InitHypotheses(const PmView& view, const PmConfig& cfg);

// omega(rho): down-weights the azimuth term where the DoLP is ambiguous.
double DolpWeight(double rho, double sigma);

struct AzimuthScore {
  double score = 0.0;
  int branch = -1;       // index into AolpCandidates, -1 for an invalid pixel
  double azimuth = 0.0;  // selected candidate
};

// Min over the four branches of omega * exp(delta^2 / tau).
AzimuthScore ScoreAzimuth(const Eigen::Vector3d& n_star, const AngleSample& polar,
                          const PmConfig& cfg);

// 1 - n_D . n*, n_D being the normal of the least-squares plane through
// (x, y, d*) and the neighbour points in `m`. Fewer than three points give
// the neutral score 1.
double ScoreNormalDepth(double d_star, const Eigen::Vector3d& n_star, const DepthMoments& m,
                        const CameraModel& cam, int x, int y);

// Mean over sources of 1 - bilateral NCC between the reference window and its
// plane-induced warp.
double ScorePhotometric(int x, int y, const Hypothesis& h, const ViewBundle& bundle,
                        const PmConfig& cfg);

// Total cost S_c + lambda1 S_a + lambda2 S_nd of one hypothesis at (x, y).
// Neighbour depths for S_nd are the observed initial depths, so the cost of a
// hypothesis does not change during propagation.
double HypothesisCost(int x, int y, const Hypothesis& h, const HypothesisField& field,
                      const ViewBundle& bundle, const PmConfig& cfg);

// Red-black sweeps; each pixel keeps the argmin over its own candidates (first
// sweep), its 4-neighbours' current best and one perturbation of its best.
void Propagate(HypothesisField* field, const ViewBundle& bundle, const PmConfig& cfg);

// Forward-backward reprojection test. `depths[k]` is the depth map of `cams[k]`.
Mask GeometricCheck(const FloatImage& ref_depth, const CameraModel& ref_cam,
                    const std::vector<FloatImage>& src_depths,
                    const std::vector<CameraModel>& src_cams, const PmConfig& cfg);

// Per-view tangent residual for one camera-frame normal and AoLP; the
// four branches swap the two residuals, the best branch keeps the smaller.
double PolarimetricResidual(const Eigen::Vector3d& n_ref_cam, const Eigen::Matrix3d& r_src_to_ref,
                            double aolp);

struct PolarView {
  const CameraModel* cam;
  const PolarMaps* polar;
  const FloatImage* depth;  // optional visibility test, may be null
};

// Mean residual over the views that see the pixel (the reference
// itself included) must be <= polar_eps_thresh. Pixels seen by no view pass.
Mask PolarimetricCheck(const FloatImage& depth, const FloatImage& normal, const PolarView& ref,
                       const std::vector<PolarView>& sources, const PmConfig& cfg);

// Mean residual used by PolarimetricCheck, -1 when no view contributes.
double PolarimetricError(int x, int y, double depth, const Eigen::Vector3d& n_view,
                         const PolarView& ref, const std::vector<PolarView>& sources,
                         const PmConfig& cfg);

// One Gaussian per valid pixel, min axis along the normal, scales
// (s, s, s/10) with s = d sqrt(2) / f, opacity 0.5. `voxel` > 0 keeps the
// first spawn per voxel.
std::vector<Gaussian> BackprojectToGaussians(const FloatImage& depth, const FloatImage& normal,
                                             const Mask& valid, const FloatImage& color,
                                             const CameraModel& cam, double voxel = 0.0);

// true iff start <= step <= end and step % interval == 0.
bool DensifySchedule(int step, int interval = 100, int start = 1000, int end = 7000);

}  // namespace polargs
