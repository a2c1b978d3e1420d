#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "polargs/splat/losses.h"
#include "polargs/splat/refine.h"
#include "polargs/synth/scene.h"
#include "test_util.h"

namespace polargs {
namespace {

CameraModel AxisCamera(int size = 65, double f = 80.0) {
  CameraModel cam;
  cam.fx = cam.fy = f;
  cam.cx = cam.cy = (size - 1) / 2.0;
  cam.width = cam.height = size;
  return cam;
}

// Flat Gaussian facing the axis camera.
Gaussian Disc(const Eigen::Vector3d& mu, double radius, double opacity, const Eigen::Vector3d& color) {
  Gaussian g;
  g.mu = mu;
  g.set_scale({radius, radius, 1e-3});
  g.set_opacity(opacity);
  g.color = color;
  return g;
}

GaussianCloud RandomCloud(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> g;
  GaussianCloud cloud;
  for (int i = 0; i < n; ++i) {
    Gaussian s;
    s.mu = {0.6 * (u(rng) - 0.5), 0.6 * (u(rng) - 0.5), 2.5 + u(rng)};
    s.quat = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized();
    s.set_scale({0.03 + 0.08 * u(rng), 0.03 + 0.08 * u(rng), 0.02 + 0.02 * u(rng)});
    s.set_opacity(0.2 + 0.5 * u(rng));
    s.color = {u(rng), u(rng), u(rng)};
    cloud.gaussians.push_back(s);
  }
  return cloud;
}

RefineView EmptyView(const CameraModel& cam, const FloatImage& target) {
  RefineView v;
  v.cam = cam;
  v.target = target;
  const int w = cam.width, h = cam.height;
  v.crm = {FloatImage(w, h, 1), FloatImage(w, h, 3), FloatImage(w, h, 3), FloatImage(w, h, 3),
           Mask(w, h, 1, 1)};
  v.masks = {Mask(w, h, 1), Mask(w, h, 1), Mask(w, h, 1, 1)};
  return v;
}

Eigen::Vector2d Pixel(const CameraModel& cam, const Eigen::Vector3d& x) {
  return ProjectPoint(cam, x).pixel;
}

}  // namespace

TEST_CASE("gaussian parameter storage") {
  Gaussian g;
  g.set_opacity(0.3);
  CHECK(g.opacity() == doctest::Approx(0.3));
  g.set_scale({0.1, 0.2, 0.05});
  CHECK(g.scale().isApprox(Eigen::Vector3d(0.1, 0.2, 0.05)));
  g.quat = Eigen::Quaterniond(Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()));
  const Eigen::Vector3d axis = g.MinAxis();
  CHECK(axis.isApprox(g.quat * Eigen::Vector3d::UnitZ()));
  const Eigen::Matrix3d cov = g.Covariance();
  CHECK((cov - cov.transpose()).norm() < 1e-15);
  CHECK(axis.dot(cov * axis) == doctest::Approx(0.05 * 0.05));
  const Eigen::Vector3d n = Eigen::Vector3d(-0.3, 0.5, 0.2).normalized();
  CHECK((QuaternionAligningZ(n) * Eigen::Vector3d::UnitZ()).isApprox(n));
  CHECK((QuaternionAligningZ(-Eigen::Vector3d::UnitZ()) * Eigen::Vector3d::UnitZ())
            .isApprox(-Eigen::Vector3d::UnitZ()));
}

TEST_CASE("ewa projection examples") {
  const CameraModel cam = AxisCamera();
  Gaussian g;
  g.mu = {0, 0, 3};
  g.set_scale({0.1, 0.1, 0.1});
  const ProjectedGaussian p = ProjectGaussian(g, cam);
  REQUIRE(p.visible);
  CHECK(p.depth == doctest::Approx(3));
  CHECK(p.mean.isApprox(Eigen::Vector2d(cam.cx, cam.cy)));
  CHECK(std::abs(p.cov(0, 1)) < 1e-12);
  CHECK(p.cov(0, 0) == doctest::Approx(p.cov(1, 1)));

  // Without dilation the footprint scales linearly with the focal length.
  CameraModel wide = cam;
  wide.fx *= 2;
  wide.fy *= 2;
  const auto e1 = ProjectGaussian(g, cam, 0.0).cov.selfadjointView<Eigen::Lower>().eigenvalues();
  const auto e2 = ProjectGaussian(g, wide, 0.0).cov.selfadjointView<Eigen::Lower>().eigenvalues();
  for (int i = 0; i < 2; ++i) CHECK(std::sqrt(e2[i]) == doctest::Approx(2 * std::sqrt(e1[i])));

  Gaussian behind = g;
  behind.mu = {0, 0, -1};
  CHECK_FALSE(ProjectGaussian(behind, cam).visible);
}

TEST_CASE("ewa covariance matches a numerical jacobian") {
  std::mt19937 rng(1);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 30; ++trial) {
    CameraModel cam = AxisCamera(101, 120.0);
    const Eigen::Quaterniond q = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
    cam.world_to_cam.topLeftCorner<3, 3>() = q.toRotationMatrix();
    const Eigen::Vector3d center(n(rng), n(rng), n(rng));
    Gaussian g = RandomCloud(rng, 1).gaussians[0];
    g.mu = cam.CamToWorld(Eigen::Vector3d(0.3 * n(rng), 0.3 * n(rng), 2.0 + 0.2 * n(rng)));
    // Central differences of the projection w.r.t. the world point.
    Eigen::Matrix<double, 2, 3> jw;
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e[k] = h;
      jw.col(k) = (Pixel(cam, g.mu + e) - Pixel(cam, g.mu - e)) / (2 * h);
    }
    const Eigen::Matrix2d oracle = jw * g.Covariance() * jw.transpose() + 0.3 * Eigen::Matrix2d::Identity();
    const ProjectedGaussian p = ProjectGaussian(g, cam);
    CHECK((p.cov - oracle).norm() <= 1e-4 * oracle.norm());
    CHECK(p.cov.determinant() > 0);
  }
}

TEST_CASE("render of one opaque disc") {
  const CameraModel cam = AxisCamera();
  GaussianCloud cloud;
  cloud.gaussians.push_back(Disc({0, 0, 3}, 0.5, 0.999, {0.2, 0.4, 0.6}));
  const SplatRender r = Render(cloud, cam);
  const int c = 32;
  CHECK(r.alpha.at(c, c) == doctest::Approx(kAlphaMax).epsilon(1e-6));
  CHECK(r.depth.at(c, c) == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(r.color.at(c, c, 1) == doctest::Approx(0.99 * 0.4).epsilon(1e-5));
  CHECK(r.normal.at(c, c, 2) == doctest::Approx(1.0).epsilon(1e-6));
  // Far corner: nothing contributes.
  CHECK(r.alpha.at(0, 0) == 0.0f);
  CHECK(r.depth.at(0, 0) == 0.0f);
  CHECK(r.color.at(0, 0, 0) == 0.0f);
  RenderOptions opt;
  opt.background = {0.1, 0.2, 0.3};
  CHECK(Render(cloud, cam, opt).color.at(0, 0, 2) == doctest::Approx(0.3));
}

TEST_CASE("two-disc alpha blend") {
  const CameraModel cam = AxisCamera();
  const Eigen::Vector3d c1(1, 0, 0), c2(0, 0.5, 1);
  GaussianCloud cloud;
  cloud.gaussians.push_back(Disc({0, 0, 4}, 0.5, 0.7, c2));
  cloud.gaussians.push_back(Disc({0, 0, 3}, 0.5, 0.5, c1));
  const SplatRender r = Render(cloud, cam);
  const Eigen::Vector3d expect = 0.5 * c1 + 0.5 * 0.7 * c2;
  for (int k = 0; k < 3; ++k) CHECK(r.color.at(32, 32, k) == doctest::Approx(expect[k]).epsilon(1e-5));
  CHECK(r.alpha.at(32, 32) == doctest::Approx(0.5 + 0.5 * 0.7));
}

TEST_CASE("accumulated alpha equals one minus the product of transmittances") {
  std::mt19937 rng(2);
  const GaussianCloud cloud = RandomCloud(rng, 40);
  const CameraModel cam = AxisCamera(48, 60.0);
  FragmentBuffer frags;
  const SplatRender r = Render(cloud, cam, {}, &frags);
  int checked = 0;
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 48; ++x) {
      double trans = 1.0;
      for (const Fragment& f : frags.at(x, y)) {
        const double a = std::min(kAlphaMax, cloud.gaussians[f.gaussian].opacity() * f.weight);
        if (a < kAlphaMin) continue;
        trans *= 1.0 - a;
        if (trans < kTransmittanceMin) break;
      }
      double sum = 0.0;
      CompositeColor(frags.at(x, y), cloud, Eigen::Vector3d::Zero(), &sum);
      CHECK(sum == doctest::Approx(1.0 - trans).epsilon(1e-9));
      CHECK(r.alpha.at(x, y) == doctest::Approx(sum).epsilon(1e-6));
      CHECK(r.alpha.at(x, y) >= 0.0f);
      CHECK(r.alpha.at(x, y) <= 1.0f);
      if (r.alpha.at(x, y) > 0.5f) {
        const Eigen::Vector3d n(r.normal.at(x, y, 0), r.normal.at(x, y, 1), r.normal.at(x, y, 2));
        CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-5));
        ++checked;
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("render ignores storage order") {
  std::mt19937 rng(3);
  const GaussianCloud cloud = RandomCloud(rng, 60);
  GaussianCloud shuffled = cloud;
  std::shuffle(shuffled.gaussians.begin(), shuffled.gaussians.end(), rng);
  const CameraModel cam = AxisCamera(40, 50.0);
  const SplatRender a = Render(cloud, cam), b = Render(shuffled, cam);
  CHECK(a.color == b.color);
  CHECK(a.depth == b.depth);
  CHECK(a.normal == b.normal);
  CHECK(a.alpha == b.alpha);
}

TEST_CASE("cloud ply round trip") {
  std::mt19937 rng(4);
  GaussianCloud cloud = RandomCloud(rng, 25);
  cloud.gaussians[3].reflective = true;
  const auto dir = test::ScratchDir("cloud");
  WriteCloudPly(dir / "c.ply", cloud);
  const GaussianCloud back = ReadCloudPly(dir / "c.ply");
  REQUIRE(back.size() == cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    const Gaussian &a = cloud.gaussians[i], &b = back.gaussians[i];
    CHECK(a.mu == b.mu);
    CHECK(a.quat.coeffs() == b.quat.coeffs());
    CHECK(a.log_scale == b.log_scale);
    CHECK(a.opacity_logit == b.opacity_logit);
    CHECK(a.color == b.color);
    CHECK(a.reflective == b.reflective);
  }
}

TEST_CASE("color loss examples") {
  const int w = 12, h = 12;
  DoubleImage render(w, h, 3, 0.4), target(w, h, 3, 0.4);
  CrmSet crm{FloatImage(w, h, 1), FloatImage(w, h, 3, 0.3f), FloatImage(w, h, 3),
             FloatImage(w, h, 3), Mask(w, h, 1, 1)};
  ReflectiveMasks masks{Mask(w, h, 1), Mask(w, h, 1), Mask(w, h, 1, 1)};
  CHECK(LossColor(render, target, crm, masks, 1.0, 0.2) == doctest::Approx(0.0));

  // One non-reflective pixel off by 0.3, one specular pixel off by 0.5.
  ReflectiveMasks two{Mask(w, h, 1), Mask(w, h, 1), Mask(w, h, 1)};
  two.non_reflective.at(3, 4) = 1;
  two.specular.at(5, 4) = 1;
  for (int c = 0; c < 3; ++c) {
    render.at(3, 4, c) = 0.5;
    target.at(3, 4, c) = 0.2;
    render.at(5, 4, c) = 0.8;
  }
  CHECK(LossColor(render, target, crm, two, 1.0, 0.0) == doctest::Approx(0.3 + 0.5));
  CHECK(LossColor(render, target, crm, two, 0.5, 0.0) == doctest::Approx(0.3 + 0.25));
  CHECK(LossColor(render, target, crm, two, 0.0, 0.0) ==
        doctest::Approx(MaskedPhotometricLoss(render, target, two.non_reflective, 0.0)));
}

TEST_CASE("normal loss examples") {
  FloatImage a(4, 3, 3), b(4, 3, 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) {
      a.at(x, y, 2) = 1;
      b.at(x, y, 2) = -1;
    }
  }
  CHECK(LossNormal(a, a) == 0.0);
  CHECK(LossNormal(a, b) == doctest::Approx(2.0));

  std::mt19937 rng(5);
  std::uniform_real_distribution<float> u(-1, 1);
  FloatImage p(9, 7, 3), q(9, 7, 3);
  for (float& v : p.samples()) v = u(rng);
  for (float& v : q.samples()) v = u(rng);
  Mask valid(9, 7, 1);
  double sum = 0.0;
  int count = 0;
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 9; ++x) {
      if ((x + 2 * y) % 3 == 0) continue;
      valid.at(x, y) = 1;
      for (int c = 0; c < 3; ++c) sum += std::abs(static_cast<double>(p.at(x, y, c)) - q.at(x, y, c));
      ++count;
    }
  }
  CHECK(LossNormal(p, q, valid) == doctest::Approx(sum / count).epsilon(1e-9));
}

TEST_CASE("depth-normal loss examples") {
  const CameraModel cam = AxisCamera(32, 40.0);
  const FloatImage plane(32, 32, 1, 2.0f);
  FloatImage facing(32, 32, 3), sideways(32, 32, 3);
  const FloatImage weights(32, 32, 1, 1.0f);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      facing.at(x, y, 2) = 1;
      sideways.at(x, y, 0) = 1;
    }
  }
  CHECK(std::abs(LossDepthNormal(plane, facing, weights, cam)) < 1e-6);
  CHECK(LossDepthNormal(plane, sideways, weights, cam) == doctest::Approx(1.0).epsilon(1e-6));

  synth::SceneSpec scene;
  synth::CameraIntrinsics k;
  k.width = k.height = 128;
  k.fx = k.fy = 160;
  const CameraModel sc = synth::LookAtCamera({0, -3, 0.5}, Eigen::Vector3d::Zero(), k);
  const synth::RenderedView v = synth::RenderView(scene, sc);
  FloatImage w(128, 128, 1);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) w.at(x, y) = v.foreground.at(x, y);
  }
  CHECK(LossDepthNormal(v.gt_depth, v.gt_normal, w, sc) < 1e-3);
}

TEST_CASE("scale and total loss examples") {
  GaussianCloud cloud;
  Gaussian g;
  g.set_scale({1, 1, 0.01});
  cloud.gaussians = {g, g};
  CHECK(LossScale(cloud) == doctest::Approx(0.01));
  cloud.gaussians[1].set_scale({0.5, 0.2, 0.3});
  CHECK(LossScale(cloud) == doctest::Approx((0.01 + 0.2) / 2));

  const LossWeights weights;
  CHECK(TotalLoss({}, weights, 10000) == 0.0);
  CHECK(TotalLoss({1, 1, 1, 1}, weights, 7000) == doctest::Approx(51.15));
  CHECK(TotalLoss({1, 1, 1, 1}, weights, 6999) == doctest::Approx(51.10));
}

RefineResult RefineAgainstOwnRender(const GaussianCloud& cloud, const CameraModel& cam) {
  const SplatRender r = Render(cloud, cam);
  std::vector<RefineView> views{EmptyView(cam, r.color)};
  views[0].masks.specular.at(20, 20) = 1;
  views[0].masks.non_reflective.at(20, 20) = 0;
  for (int c = 0; c < 3; ++c) views[0].crm.i_diff.at(20, 20, c) = r.color.at(20, 20, c);
  RefineConfig cfg;
  cfg.steps = 5;
  return RefineReflectiveColors(cloud, views, cfg);
}

TEST_CASE("refinement leaves a perfectly fitting cloud alone") {
  std::mt19937 rng(6);
  const CameraModel cam = AxisCamera(40, 50.0);

  SUBCASE("exact zero residual") {
    // Black Gaussians render exactly 0 whatever their opacity.
    GaussianCloud cloud = RandomCloud(rng, 20);
    for (auto& g : cloud.gaussians) g.color.setZero();
    const RefineResult out = RefineAgainstOwnRender(cloud, cam);
    CHECK(out.flagged > 0);
    for (size_t i = 0; i < cloud.size(); ++i) {
      CHECK(out.cloud.gaussians[i].color == cloud.gaussians[i].color);
      CHECK(out.cloud.gaussians[i].opacity_logit == cloud.gaussians[i].opacity_logit);
    }
    for (double l : out.loss_trace) CHECK(l == 0.0);
  }

  SUBCASE("target rounded to float") {
    const GaussianCloud cloud = RandomCloud(rng, 20);
    const RefineResult out = RefineAgainstOwnRender(cloud, cam);
    CHECK(out.loss_trace.front() < 1e-6);
    for (size_t k = 1; k < out.loss_trace.size(); ++k) {
      CHECK(out.loss_trace[k] <= out.loss_trace[k - 1]);
    }
    for (size_t i = 0; i < cloud.size(); ++i) {
      CHECK((out.cloud.gaussians[i].color - cloud.gaussians[i].color).cwiseAbs().maxCoeff() < 1e-6);
      CHECK(std::abs(out.cloud.gaussians[i].opacity() - cloud.gaussians[i].opacity()) < 1e-6);
    }
  }
}

TEST_CASE("color objective gradient matches finite differences") {
  std::mt19937 rng(7);
  GaussianCloud cloud = RandomCloud(rng, 12);
  for (auto& g : cloud.gaussians) g.reflective = true;
  const CameraModel cam = AxisCamera(24, 30.0);
  FloatImage target(24, 24, 3);
  std::uniform_real_distribution<float> u(0, 1);
  for (float& v : target.samples()) v = u(rng);
  std::vector<RefineView> views{EmptyView(cam, target)};
  for (int y = 6; y < 18; ++y) {
    for (int x = 6; x < 18; ++x) {
      views[0].masks.specular.at(x, y) = 1;
      views[0].masks.non_reflective.at(x, y) = 0;
      for (int c = 0; c < 3; ++c) views[0].crm.i_diff.at(x, y, c) = u(rng);
    }
  }
  RefineConfig cfg;
  cfg.lambda_dssim = 0.0;
  const ColorObjective obj(cloud, views, cfg);
  std::vector<Eigen::Vector3d> gc;
  std::vector<double> go;
  obj.Evaluate(cloud, &gc, &go);
  const double h = 1e-4;
  for (size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 4; ++k) {
      GaussianCloud hi = cloud, lo = cloud;
      if (k < 3) {
        hi.gaussians[i].color[k] += h;
        lo.gaussians[i].color[k] -= h;
      } else {
        hi.gaussians[i].set_opacity(cloud.gaussians[i].opacity() + h);
        lo.gaussians[i].set_opacity(cloud.gaussians[i].opacity() - h);
      }
      const double fd = (obj.Evaluate(hi) - obj.Evaluate(lo)) / (2 * h);
      const double an = k < 3 ? gc[i][k] : go[i];
      CAPTURE(i);
      CAPTURE(k);
      CHECK(std::abs(an - fd) <= 1e-4 * std::max(std::abs(fd), 1e-3));
    }
  }
}

}  // namespace polargs
