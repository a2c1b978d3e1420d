#pragma once

#include <cstddef>
#include <filesystem>

#include "polargs/pipeline/config.h"

namespace polargs::pipeline {

// Every stage reads its inputs from, and writes its artifacts to,
// cfg.output_dir (the dataset may live elsewhere, see input.dataset). Each
// stage adds its section to report.json and its wall time to timing.json.

// Per view: four analyzer PNGs, camera JSON and ground-truth depth, normal and
// azimuth PFMs; plus manifest.json.
void CmdSynth(const PipelineConfig& cfg);

// Per view: s0/s1/s2 and AoLP/DoLP PFMs and the s0/2 intensity PNG.
void CmdPreprocess(const PipelineConfig& cfg);

// Builds the initial cloud, localizes reflective pixels, writes masks and
// correction maps, refines reflective Gaussians and writes the loss trace.
void CmdCorrect(const PipelineConfig& cfg);

// PatchMatch rounds at the scheduled steps; writes per-view optimized depth,
// normal and validity and the augmented cloud.
void CmdDensify(const PipelineConfig& cfg);

// TSDF fusion of depth rendered from the final cloud; writes the mesh.
void CmdReconstruct(const PipelineConfig& cfg);

struct EvalOptions {
  std::filesystem::path mesh;  // empty: output_dir/reconstruct/mesh.ply
  std::filesystem::path gt;    // mesh PLY; empty: analytic scene of the dataset
};

struct EvalResult {
  double cd = 0.0;
  double mae_deg = 0.0;
  size_t n_points = 0;
  bool pass = false;
};

// Throws kUsage when the mesh or the ground truth is missing.
EvalResult CmdEval(const PipelineConfig& cfg, const EvalOptions& options = {});

// All stages in order.
EvalResult CmdPipeline(const PipelineConfig& cfg);

}  // namespace polargs::pipeline
