#include <cmath>
#include <numbers>

#include "doctest.h"
#include "polargs/synth/scene.h"
#include "test_util.h"

namespace polargs::synth {
namespace {

using test::ErrorKindOf;

constexpr double kPi = std::numbers::pi;

CameraIntrinsics Small() {
  CameraIntrinsics k;
  k.width = k.height = 64;
  k.fx = k.fy = 80.0;
  return k;
}

double Azimuth(const CameraModel& cam) {
  const Eigen::Vector3d c = cam.center();
  return WrapFullTurn(std::atan2(c.y(), c.x()));
}

void CheckLooksAt(const CameraModel& cam, const Eigen::Vector3d& target, double radius) {
  CHECK((cam.center() - target).norm() == doctest::Approx(radius).epsilon(1e-9));
  const Eigen::Matrix3d r = cam.rotation();
  CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(r.determinant() == doctest::Approx(1.0));
  // The target projects to the principal point.
  const Eigen::Vector3d t = cam.WorldToCam(target);
  CHECK(t.z() > 0);
  CHECK(std::abs(t.x()) < 1e-9);
  CHECK(std::abs(t.y()) < 1e-9);
}

}  // namespace

TEST_CASE("camera ring examples") {
  const Eigen::Vector3d target(0.1, -0.2, 0.05);
  const auto four = MakeCameraRing(4, 2.0, 0.0, Eigen::Vector3d::Zero(), Small());
  REQUIRE(four.size() == 4);
  for (int i = 0; i < 4; ++i) {
    const double expect = i * kPi / 2;
    CHECK(std::abs(WrapDifference(Azimuth(four[i]) - expect)) < 1e-9);
  }
  const auto twenty = MakeCameraRing(20, 3.0, 0.3, target, Small());
  REQUIRE(twenty.size() == 20);
  for (const auto& cam : twenty) {
    CheckLooksAt(cam, target, 3.0);
    CHECK_NOTHROW(cam.Validate());
  }
  CHECK(ErrorKindOf([] { MakeCameraRing(1, 3.0, 0.0, Eigen::Vector3d::Zero()); }) ==
        ErrorKind::kConfig);
  CHECK(ErrorKindOf([] { MakeCameraRing(4, 0.0, 0.0, Eigen::Vector3d::Zero()); }) ==
        ErrorKind::kConfig);
}

TEST_CASE("camera sphere covers both hemispheres") {
  const auto cams = MakeCameraSphere(20, 3.0, Eigen::Vector3d::Zero(), Small());
  REQUIRE(cams.size() == 20);
  int up = 0, down = 0;
  for (const auto& cam : cams) {
    CheckLooksAt(cam, Eigen::Vector3d::Zero(), 3.0);
    (cam.center().z() > 0 ? up : down)++;
  }
  CHECK(up == 10);
  CHECK(down == 10);
  CHECK(ErrorKindOf([] { MakeCameraSphere(1, 3.0, Eigen::Vector3d::Zero()); }) ==
        ErrorKind::kConfig);
}

TEST_CASE("shape names") {
  CHECK(ShapeFromName("sphere") == ShapeKind::kSphere);
  CHECK(ShapeName(ShapeFromName("supershape")) == "supershape");
  CHECK(ErrorKindOf([] { ShapeFromName("teapot"); }) == ErrorKind::kConfig);
  SceneSpec bad;
  bad.radius = -1;
  CHECK(ErrorKindOf([&] { bad.Validate(); }) == ErrorKind::kConfig);
}

TEST_CASE("sphere view facing the camera") {
  SceneSpec scene;
  const CameraModel cam = LookAtCamera({3, 0, 0}, Eigen::Vector3d::Zero(), Small());
  const RenderedView v = RenderView(scene, cam);
  // Centre pixel sees the nearest point, normal straight at the viewer.
  const int c = 32;
  REQUIRE(v.foreground.at(c, c) == 1);
  const float cx = static_cast<float>(cam.cx), cy = static_cast<float>(cam.cy);
  REQUIRE(cx == doctest::Approx(31.5));
  REQUIRE(cy == doctest::Approx(31.5));
  CHECK(v.gt_depth.at(c, c) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(v.gt_normal.at(c, c, 2) == doctest::Approx(1.0).epsilon(1e-3));
  const PolarMaps m = AolpDolp(StokesFromAngles(v.capture));
  // rho = diffuse_max * sin^2(zenith): nearly zero at the centre.
  CHECK(m.dolp.at(c, c) < 1e-3);
  CHECK(v.gt_depth.at(0, 0) == 0);
  CHECK(v.foreground.at(0, 0) == 0);
}

TEST_CASE("diffuse dolp follows the zenith surrogate") {
  SceneSpec scene;
  scene.dolp_model.diffuse_max = 0.4;
  const CameraModel cam = LookAtCamera({3, 0, 0}, Eigen::Vector3d::Zero(), Small());
  const RenderedView v = RenderView(scene, cam);
  const PolarMaps m = AolpDolp(StokesFromAngles(v.capture));
  double best = 0.0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (!v.foreground.at(x, y)) continue;
      const double nz = v.gt_normal.at(x, y, 2);
      CHECK(m.dolp.at(x, y) == doctest::Approx(0.4 * (1 - nz * nz)).epsilon(1e-4));
      best = std::max<double>(best, m.dolp.at(x, y));
    }
  }
  // From distance 3 the limb zenith is 90 deg - asin(1/3).
  const double limb = std::cos(std::asin(1.0 / 3.0));
  CHECK(best <= 0.4 * limb * limb + 1e-6);
  CHECK(best > 0.3);
}

TEST_CASE("rendered view properties") {
  SceneSpec scene;
  scene.shape = ShapeKind::kSupershape;
  scene.textured = true;
  scene.specular.strength = 1.0;
  const auto cams = MakeCameraRing(3, 3.0, 0.4, Eigen::Vector3d::Zero(), Small());
  for (size_t vi = 0; vi < cams.size(); ++vi) {
    const RenderedView v = RenderView(scene, cams[vi], static_cast<int>(vi));
    const auto& im = v.capture.images;
    const StokesImage s = StokesFromAngles(v.capture);
    const PolarMaps m = AolpDolp(s);
    const FloatImage inten = IntensityImage(s);
    int specular = 0;
    for (int y = 0; y < v.gt_depth.height(); ++y) {
      for (int x = 0; x < v.gt_depth.width(); ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          // Malus consistency.
          CHECK(im[0].at(x, y, ch) + im[2].at(x, y, ch) ==
                doctest::Approx(im[1].at(x, y, ch) + im[3].at(x, y, ch)).epsilon(1e-6));
        }
        if (v.gt_depth.at(x, y) > 0) {
          const Eigen::Vector3d n(v.gt_normal.at(x, y, 0), v.gt_normal.at(x, y, 1),
                                  v.gt_normal.at(x, y, 2));
          CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-5));
          CHECK(v.gt_azimuth.at(x, y) >= 0);
          CHECK(v.gt_azimuth.at(x, y) < 2 * kPi + 1e-6);
        } else {
          CHECK(v.foreground.at(x, y) == 0);
          CHECK(v.specular_mask.at(x, y) == 0);
        }
        CHECK(!(v.specular_mask.at(x, y) && v.overexposed_mask.at(x, y)));
        if (v.specular_mask.at(x, y)) {
          ++specular;
          CHECK(m.dolp.at(x, y) >= 0.3 - 1e-6);
          float mx = 0;
          for (int ch = 0; ch < 3; ++ch) mx = std::max(mx, inten.at(x, y, ch));
          CHECK(mx >= 160.0 / 255.0 - 1e-6);
        }
        // AoLP follows the azimuth, shifted by pi/2 on specular-dominant pixels.
        if (m.valid.at(x, y) && m.dolp.at(x, y) > 0.01 && v.gt_depth.at(x, y) > 0 &&
            !v.overexposed_mask.at(x, y)) {
          const double shift = v.reflect_specular.at(x, y) ? kPi / 2 : 0.0;
          const double d = WrapDifference(2 * (m.aolp.at(x, y) - v.gt_azimuth.at(x, y) - shift)) / 2;
          CHECK(std::abs(d) < 1e-3);
        }
      }
    }
    CHECK(specular > 0);
  }
}

TEST_CASE("gt normal matches the analytic gradient") {
  SceneSpec scene;
  scene.shape = ShapeKind::kSupershape;
  const CameraModel cam = LookAtCamera({2.5, 1.0, 1.2}, Eigen::Vector3d::Zero(), Small());
  const RenderedView v = RenderView(scene, cam);
  int checked = 0;
  for (int y = 0; y < 64; y += 3) {
    for (int x = 0; x < 64; x += 3) {
      if (v.gt_depth.at(x, y) <= 0) continue;
      const Eigen::Vector3d p = BackprojectPixel(cam, {x, y}, v.gt_depth.at(x, y));
      const Eigen::Vector3d g = CamToView(cam.rotation() * ShapeGradientNormal(scene, p));
      const Eigen::Vector3d n(v.gt_normal.at(x, y, 0), v.gt_normal.at(x, y, 1),
                              v.gt_normal.at(x, y, 2));
      // Float storage of depth and normal bounds the agreement.
      CHECK((g - n).norm() < 1e-4);
      ++checked;
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("rendering is deterministic") {
  SceneSpec scene;
  scene.textured = true;
  scene.specular.strength = 0.8;
  const CameraModel cam = LookAtCamera({0.5, 2.8, 1.0}, Eigen::Vector3d::Zero(), Small());
  const RenderedView a = RenderView(scene, cam, 3);
  const RenderedView b = RenderView(scene, cam, 3);
  for (int k = 0; k < 4; ++k) CHECK(a.capture.images[k] == b.capture.images[k]);
  CHECK(a.gt_depth == b.gt_depth);
  CHECK(a.gt_normal == b.gt_normal);
  CHECK(a.specular_mask == b.specular_mask);
}

TEST_CASE("corrupt depth") {
  FloatImage depth(100, 100, 1);
  int valid = 0;
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) {
      if ((x - 50) * (x - 50) + (y - 50) * (y - 50) < 40 * 40) {
        depth.at(x, y) = 2.0f + 0.01f * x;
        ++valid;
      }
    }
  }
  CHECK(CorruptDepth(depth, 0.0, 0.0, 9) == depth);

  const FloatImage holes = CorruptDepth(depth, 0.0, 0.3, 9);
  int zeroed = 0;
  for (size_t i = 0; i < depth.size(); ++i) {
    if (depth.data()[i] > 0 && holes.data()[i] == 0) ++zeroed;
    if (depth.data()[i] == 0) CHECK(holes.data()[i] == 0);
  }
  CHECK(std::abs(zeroed - 0.3 * valid) <= 0.01 * valid);

  const FloatImage noisy = CorruptDepth(depth, 0.05, 0.0, 9);
  double worst = 0.0;
  for (size_t i = 0; i < depth.size(); ++i) {
    if (depth.data()[i] > 0) {
      worst = std::max(worst, std::abs(noisy.data()[i] / depth.data()[i] - 1.0));
    }
  }
  CHECK(worst <= 0.05 + 1e-6);
  CHECK(worst > 0.04);
  CHECK(CorruptDepth(depth, 0.05, 0.3, 9) == CorruptDepth(depth, 0.05, 0.3, 9));
}

TEST_CASE("corrupt normals stays unit and bounded") {
  FloatImage n(10, 10, 3);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      const Eigen::Vector3d v = Eigen::Vector3d(x - 4.5, y - 4.5, 8).normalized();
      for (int c = 0; c < 3; ++c) n.at(x, y, c) = static_cast<float>(v[c]);
    }
  }
  n.at(0, 0, 0) = n.at(0, 0, 1) = n.at(0, 0, 2) = 0;
  const double max_angle = 5 * kPi / 180;
  const FloatImage out = CorruptNormals(n, max_angle, 4);
  CHECK(out.at(0, 0, 2) == 0);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      if (x == 0 && y == 0) continue;
      const Eigen::Vector3d a(n.at(x, y, 0), n.at(x, y, 1), n.at(x, y, 2));
      const Eigen::Vector3d b(out.at(x, y, 0), out.at(x, y, 1), out.at(x, y, 2));
      CHECK(b.norm() == doctest::Approx(1.0).epsilon(1e-5));
      CHECK(std::atan2(a.cross(b).norm(), a.dot(b)) <= max_angle + 1e-5);
    }
  }
}

TEST_CASE("surface samples lie on the shape") {
  SceneSpec scene;
  scene.radius = 0.7;
  scene.center = {0.1, 0.2, -0.3};
  const auto pts = SampleSurface(scene, 2000, 3);
  REQUIRE(pts.size() == 2000);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) {
    CHECK((p - scene.center).norm() == doctest::Approx(0.7).epsilon(1e-9));
    mean += p;
  }
  CHECK((mean / 2000 - scene.center).norm() < 0.05);
}

}  // namespace polargs::synth
