#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dts/denoiser.hpp"
#include "dts/pyramid.hpp"
#include "dts/tensor.hpp"

namespace dts {

struct RunConfig {
  std::string layout_path;                   // empty: unconditioned run
  std::optional<layout::Canvas> canvas;      // pixels; defaults to the layout canvas
  int window = 512;                          // pixels
  int stride = 256;                          // pixels
  int latent_scale = 8;
  std::size_t channels = 4;
  int steps = 50;
  std::string backend = "analytic";          // analytic | mock | zero | external
  std::string endpoint;
  double prior_mean = 0.0;
  double prior_std = 1.0;
  std::uint64_t seed = 0;
  bool pyramid = true;
  int phases = 2;
  double alpha = 2.0;
  double gamma = 0.05;
  int d = 1;
  std::vector<double> tp;                    // empty: 0.5 for every phase
  std::string interp = "bilinear";
  double eta = 0.0;
  std::size_t threads = 0;
  std::filesystem::path out = "out.dtxl";
};

struct LatentPlan {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t window = 0;
  std::size_t stride = 0;
  std::size_t windows = 0;
};

struct RunResult {
  LatentTensor output;
  LatentPlan plan;                           // plan of the final canvas
  std::vector<PhaseRecord> phases;
  std::string output_digest;
  std::string manifest_json;
  std::filesystem::path manifest_path;
};

/// Latent canvas and window plan implied by the pixel-level parameters.
LatentPlan latent_plan(const RunConfig& config);

std::unique_ptr<Denoiser> make_backend(const RunConfig& config);

/// Runs the configured pipeline, writes the tensor to `config.out` and the
/// manifest next to it (`<out>.manifest.json`).
RunResult run_generate(const RunConfig& config);

/// Same as run_generate without touching the filesystem for outputs.
RunResult run_in_memory(const RunConfig& config);

std::string manifest_path_for(const std::filesystem::path& out);

RunConfig config_from_manifest(const std::string& manifest_json);

struct ReplayResult {
  std::string expected_digest;
  std::string actual_digest;
  bool matches() const { return expected_digest == actual_digest; }
};

/// Re-runs a manifest in memory and compares digests.
ReplayResult replay_manifest(const std::string& manifest_json);

}  // namespace dts
