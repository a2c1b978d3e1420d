#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "doctest.h"
#include "polargs/core/io.h"
#include "polargs/core/stokes.h"
#include "polargs/fusion/mesh.h"
#include "polargs/pipeline/commands.h"
#include "polargs/splat/gaussian.h"
#include "polargs/synth/scene.h"
#include "test_util.h"

namespace polargs::pipeline {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using test::ErrorKindOf;

// A desk-sized run: few small views and a coarse volume.
std::vector<std::string> Tiny(const fs::path& out) {
  return {"cameras.count=6",        "cameras.width=48",        "cameras.height=48",
          "cameras.fx=60",          "cameras.fy=60",           "fusion.voxel_size=0.03",
          "fusion.truncation=0.12", "eval.samples=5000",       "patchmatch.ncc_window=5",
          "patchmatch.nd_window=5", "correction.steps=10",     "output_dir=" + out.string()};
}

PipelineConfig TinyConfig(const fs::path& out, std::vector<std::string> extra = {}) {
  auto o = Tiny(out);
  o.insert(o.end(), extra.begin(), extra.end());
  return LoadConfig("", o);
}

size_t CountFiles(const fs::path& dir) {
  size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

json Report(const PipelineConfig& cfg) {
  return json::parse(ReadTextFile(cfg.output_dir / "report.json"));
}

}  // namespace

TEST_CASE("config defaults and echo") {
  const PipelineConfig cfg = LoadConfig("", {"output_dir=/tmp/x"});
  CHECK(cfg.patchmatch.lambda1 == 0.2);
  CHECK(cfg.patchmatch.lambda2 == 0.05);
  CHECK(cfg.patchmatch.tau == 0.1);
  CHECK(cfg.patchmatch.sigma == 0.5);
  CHECK(cfg.fusion.tsdf.voxel_size == 0.008);
  CHECK(cfg.fusion.tsdf.truncation == 0.04);
  CHECK(cfg.fusion.tsdf.max_depth == 10.0);
  CHECK(cfg.dataset.empty());
  CHECK(cfg.DatasetDir() == fs::path("/tmp/x") / "dataset");

  const PipelineConfig tweaked = LoadConfig("", {"seed=11", "patchmatch.lambda1=0.02",
                                                 "scene.shape=\"supershape\"", "scene.textured=true"});
  CHECK(tweaked.seed == 11);
  CHECK(tweaked.patchmatch.seed == 11);
  CHECK(tweaked.scene.rng_seed == 11);
  CHECK(tweaked.patchmatch.lambda1 == 0.02);
  CHECK(tweaked.scene.shape == synth::ShapeKind::kSupershape);
  // The echo re-parses to the same configuration.
  CHECK(ConfigToJson(ParseConfig(ConfigToJson(tweaked))) == ConfigToJson(tweaked));
  // Runtime settings stay out of the echo.
  const json echo = json::parse(ConfigToJson(cfg));
  CHECK_FALSE(echo.contains("output_dir"));
  CHECK_FALSE(echo.contains("threads"));
}

TEST_CASE("config file with overrides") {
  const auto dir = test::ScratchDir("config_file");
  WriteTextFile(dir / "c.json", R"({"seed": 3, "scene": {"radius": 0.8}, "fusion": {"voxel_size": 0.01}})");
  const PipelineConfig cfg = LoadConfig(dir / "c.json", {"scene.radius=0.9"});
  CHECK(cfg.seed == 3);
  CHECK(cfg.scene.radius == 0.9);
  CHECK(cfg.fusion.tsdf.voxel_size == 0.01);
  CHECK(ErrorKindOf([&] { LoadConfig(dir / "missing.json"); }) == ErrorKind::kConfig);
  WriteTextFile(dir / "bad.json", "{\"seed\": ");
  CHECK(ErrorKindOf([&] { LoadConfig(dir / "bad.json"); }) == ErrorKind::kConfig);
}

TEST_CASE("config errors") {
  auto kind = [](std::vector<std::string> o) { return ErrorKindOf([&] { LoadConfig("", o); }); };
  CHECK(kind({"scene.colour=1"}) == ErrorKind::kConfig);
  CHECK(kind({"nosection=1"}) == ErrorKind::kConfig);
  CHECK(kind({"cameras.count=2.5"}) == ErrorKind::kConfig);
  CHECK(kind({"scene.textured=3"}) == ErrorKind::kConfig);
  CHECK(kind({"scene.albedo=[1,2]"}) == ErrorKind::kConfig);
  CHECK(kind({"scene.radius"}) == ErrorKind::kConfig);
  CHECK(kind({"scene.shape=teapot"}) == ErrorKind::kConfig);
  CHECK(kind({"cameras.count=1"}) == ErrorKind::kConfig);
  CHECK(kind({"cameras.layout=grid"}) == ErrorKind::kConfig);
  CHECK(kind({"patchmatch.lambda1=-1"}) == ErrorKind::kConfig);
  CHECK(kind({"fusion.truncation=0.001"}) == ErrorKind::kConfig);
  CHECK(kind({"input.dataset=/nonexistent/polargs"}) == ErrorKind::kConfig);
  CHECK(ErrorKindOf([] { ParseConfig(R"({"splat": {"iterations": 10, "extra": 1}})"); }) ==
        ErrorKind::kConfig);
}

TEST_CASE("synth writes the documented dataset") {
  const auto dir = test::ScratchDir("synth");
  const PipelineConfig cfg = LoadConfig("", {"output_dir=" + dir.string()});
  CmdSynth(cfg);
  const fs::path data = cfg.DatasetDir();
  CHECK(CountFiles(data) == 20 * (4 + 3 + 1) + 1);
  CHECK(fs::exists(data / "view_000" / "angle_045.png"));
  CHECK(fs::exists(data / "view_019" / "gt_normal.pfm"));
  const std::string first = ReadTextFile(data / "view_007" / "angle_090.png");
  const std::string manifest = ReadTextFile(data / "manifest.json");
  CmdSynth(cfg);
  CHECK(ReadTextFile(data / "view_007" / "angle_090.png") == first);
  CHECK(ReadTextFile(data / "manifest.json") == manifest);
}

TEST_CASE("stage chain on a tiny scene") {
  const auto dir = test::ScratchDir("chain");
  const PipelineConfig cfg = TinyConfig(dir);

  // Stages need their inputs.
  CHECK(ErrorKindOf([&] { CmdPreprocess(cfg); }) == ErrorKind::kData);
  CmdSynth(cfg);
  CmdPreprocess(cfg);

  SUBCASE("preprocess outputs") {
    const fs::path v = cfg.output_dir / "preprocess" / "view_002";
    const FloatImage s0 = ReadPfm(v / "s0.pfm"), s1 = ReadPfm(v / "s1.pfm"), s2 = ReadPfm(v / "s2.pfm");
    const FloatImage dolp = ReadPfm(v / "dolp.pfm");
    for (size_t i = 0; i < s0.size(); ++i) {
      CHECK(s1.data()[i] * s1.data()[i] + s2.data()[i] * s2.data()[i] <=
            s0.data()[i] * s0.data()[i] + 1e-6);
    }
    for (float d : dolp.samples()) {
      CHECK(d >= 0.0f);
      CHECK(d <= 1.0f);
    }
    // Same as the in-memory computation on the stored captures.
    PolarizedCapture cap;
    for (int k = 0; k < 4; ++k) {
      const char* names[4] = {"angle_000.png", "angle_045.png", "angle_090.png", "angle_135.png"};
      cap.images[k] = ReadPng16(cfg.DatasetDir() / "view_002" / names[k]);
    }
    const StokesImage mem = StokesFromAngles(cap);
    for (size_t i = 0; i < s0.size(); ++i) CHECK(std::abs(mem.s0.data()[i] - s0.data()[i]) <= 1e-6);
    // And within PNG quantization of the direct render.
    const auto cams = synth::MakeCameraSphere(6, 3.0, cfg.scene.center,
                                              synth::CameraIntrinsics{48, 48, 60, 60});
    const StokesImage direct = StokesFromAngles(synth::RenderView(cfg.scene, cams[2], 2).capture);
    for (size_t i = 0; i < s0.size(); ++i) {
      CHECK(std::abs(direct.s0.data()[i] - s0.data()[i]) <= 1.0 / 65535 + 1e-6);
    }
  }

  SUBCASE("later stages") {
    // No highlights in the default scene: correction is a logged no-op.
    CmdCorrect(cfg);
    CHECK(Report(cfg)["correct"]["flagged"] == 0);
    CHECK(fs::exists(cfg.output_dir / "correct" / "cloud.ply"));

    CmdDensify(cfg);
    for (int v = 0; v < 6; ++v) {
      const fs::path d = cfg.output_dir / "densify" / ("view_00" + std::to_string(v));
      CHECK(fs::exists(d / "d_opt.pfm"));
      CHECK(fs::exists(d / "n_opt.pfm"));
      CHECK(fs::exists(d / "valid.png"));
    }
    const json dens = Report(cfg)["densify"];
    CHECK(dens["coverage_after"].get<double>() >= dens["coverage_before"].get<double>());

    CmdReconstruct(cfg);
    const TriangleMesh mesh = ReadMeshPly(cfg.output_dir / "reconstruct" / "mesh.ply");
    CHECK(!mesh.triangles.empty());
    const json rec = Report(cfg)["reconstruct"];
    CHECK(rec["voxel_size"] == 0.03);
    CHECK(rec["truncation"] == 0.12);
    CHECK(rec["max_depth"] == 10.0);

    const EvalResult self = CmdEval(cfg, {cfg.output_dir / "reconstruct" / "mesh.ply",
                                          cfg.output_dir / "reconstruct" / "mesh.ply"});
    CHECK(self.cd == 0.0);
    CHECK(self.pass);
    const EvalResult gt = CmdEval(cfg);
    CHECK(gt.n_points == 5000);
    CHECK(gt.cd < 0.05);
    CHECK(Report(cfg)["eval"]["coverage"].is_number());
    CHECK(ErrorKindOf([&] { CmdEval(cfg, {{}, cfg.output_dir / "nope.ply"}); }) == ErrorKind::kUsage);

    // An empty cloud cannot be reconstructed.
    WriteCloudPly(cfg.output_dir / "densify" / "cloud.ply", GaussianCloud{});
    CHECK(ErrorKindOf([&] { CmdReconstruct(cfg); }).has_value());
  }
}

TEST_CASE("correction on a highlight scene") {
  const auto dir = test::ScratchDir("highlight");
  const PipelineConfig cfg = TinyConfig(dir, {"scene.specular_strength=0.35", "cameras.count=4",
                                              "cameras.width=64", "cameras.height=64",
                                              "cameras.fx=80", "cameras.fy=80"});
  CmdSynth(cfg);
  CmdPreprocess(cfg);
  CmdCorrect(cfg);
  const json rep = Report(cfg)["correct"];
  CHECK(rep["specular_pixels"].get<int>() > 0);
  CHECK(rep["flagged"].get<int>() > 0);
  std::ifstream trace(cfg.output_dir / "correct" / "loss_trace.csv");
  std::string line;
  std::getline(trace, line);  // header
  std::vector<double> loss;
  while (std::getline(trace, line)) loss.push_back(std::stod(line.substr(line.find(',') + 1)));
  REQUIRE(loss.size() >= 2);
  for (size_t k = 1; k < loss.size(); ++k) CHECK(loss[k] <= loss[k - 1]);
  CHECK(loss.back() < loss.front());
}

TEST_CASE("eval without ground truth") {
  const auto dir = test::ScratchDir("eval_nogt");
  const PipelineConfig cfg = TinyConfig(dir);
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}};
  WriteMeshPly(dir / "m.ply", m);
  CHECK(ErrorKindOf([&] { CmdEval(cfg, {dir / "m.ply", {}}); }) == ErrorKind::kUsage);
  CHECK(ErrorKindOf([&] { CmdEval(cfg, {dir / "missing.ply", dir / "m.ply"}); }) == ErrorKind::kUsage);
}

}  // namespace polargs::pipeline
