#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "polargs/correction/correction.h"
#include "polargs/fusion/tsdf.h"
#include "polargs/patchmatch/patchmatch.h"
#include "polargs/splat/refine.h"
#include "polargs/synth/scene.h"

namespace polargs::pipeline {

// Environment variable naming the default root for run outputs.
inline constexpr const char* kOutputRootEnv = "POLARGS_OUTPUT_ROOT";

struct CameraSetup {
  int count = 20;
  std::string layout = "sphere";  // "sphere" (Fibonacci) or "ring"
  double distance = 3.0;
  double elevation = 0.3;  // ring only, radians
  synth::CameraIntrinsics intrinsics;
};

// Stand-in for the trained Gaussian cloud: ground-truth maps corrupted and
// back-projected.
struct InitCloudConfig {
  double depth_noise = 0.002;
  double hole_fraction = 0.3;
  double normal_noise_deg = 5.0;
  double voxel = 0.0;
};

struct SplatConfig {
  int iterations = 1000;
  int densify_interval = 100;
  int densify_start = 1000;
  int densify_end = 7000;
  int sources = 4;               // nearest cameras used as PatchMatch sources
  double coverage_alpha = 0.5;   // a pixel counts as covered at this alpha
  double spawn_voxel = 0.0;      // > 0 thins spawned Gaussians
};

struct FusionConfig {
  TsdfConfig tsdf;
  double alpha_min = 0.5;     // rendered depth kept where alpha reaches this
  double min_normal_z = 0.6;  // and the rendered normal faces the camera this much
  double margin = 0.1;        // volume padding around the cloud bounds
};

struct EvalConfig {
  int samples = 100000;
  double cd_max = 0.024;
  double mae_max_deg = 5.0;
};

struct PipelineConfig {
  uint64_t seed = 7;
  int threads = 0;
  std::filesystem::path output_dir;
  std::filesystem::path dataset;  // empty: output_dir / "dataset"
  synth::SceneSpec scene;
  CameraSetup cameras;
  InitCloudConfig init;
  CorrectionConfig correction;
  RefineConfig refine;
  PmConfig patchmatch;
  SplatConfig splat;
  FusionConfig fusion;
  EvalConfig eval;

  std::filesystem::path DatasetDir() const;
  void Validate() const;  // throws kConfig
};

// Loads `path` (empty: defaults only), applies "section.key=value" overrides
// in order and validates. Unknown keys and type mismatches throw kConfig.
PipelineConfig LoadConfig(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

// Same, from JSON text (for example an echoed configuration).
PipelineConfig ParseConfig(const std::string& json_text,
                           const std::vector<std::string>& overrides = {});

// Fully resolved configuration as JSON. Settings that do not affect outputs
// (output_dir, threads) are left out, so the echo of two runs writing to
// different directories is identical.
std::string ConfigToJson(const PipelineConfig& cfg);

// The default configuration with every key, as written by `polargs config`.
std::string DefaultConfigJson();

}  // namespace polargs::pipeline
