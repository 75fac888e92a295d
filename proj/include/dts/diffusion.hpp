#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dts/conditions.hpp"
#include "dts/denoiser.hpp"
#include "dts/geometry.hpp"
#include "dts/rng.hpp"
#include "dts/schedule.hpp"

namespace dts {

/// z_t = sqrt(ab_t) z0 + sqrt(1 - ab_t) eps with eps drawn from `rng`.
LatentTensor forward_noise(const LatentTensor& z0, int t, const NoiseSchedule& schedule, Rng& rng);

struct StepOptions {
  /// 0 gives the deterministic DDIM update; > 0 adds fresh noise.
  double eta = 0.0;
};

/// One reverse step x_t -> x_{t-1} through the backend's noise prediction.
LatentTensor denoise_step(const LatentTensor& x_t, int t, const ViewCondition& condition, Denoiser& backend,
                          const NoiseSchedule& schedule, Rng& rng, const StepOptions& options = {});

/// Where views are averaged inside a step. Views are re-cropped from the
/// stitched canvas each step, so both orders give identical results.
enum class StitchOrder { AfterDenoise, BeforeDenoise };

struct VcjdOptions {
  double eta = 0.0;
  StitchOrder order = StitchOrder::AfterDenoise;
  std::uint32_t phase = 0;  // selects RNG streams inside a pyramid run
  std::size_t threads = 0;  // 0: hardware concurrency
};

/// Denoise every view, stitch on the canvas, re-crop every window.
std::vector<View> vcjd_step(std::span<const View> views, int t, std::span<const ViewCondition> conditions,
                            Denoiser& backend, const NoiseSchedule& schedule, const RngStream& streams,
                            Extent canvas, const VcjdOptions& options = {});

/// Joint reverse run from step `start_step` down to 0 over the plan.
LatentTensor vcjd(const LatentTensor& z_start, const ConditionSet& conditions, int start_step, const WindowPlan& plan,
                  Denoiser& backend, const NoiseSchedule& schedule, std::uint64_t master_seed,
                  const VcjdOptions& options = {});

/// Per-window conditions for a plan; an empty condition set yields blank
/// conditions carrying only the caption.
std::vector<ViewCondition> view_conditions(const ConditionSet& conditions, const WindowPlan& plan);

/// Plain single-view reverse run (the reference sampler).
LatentTensor sample_sequential(const LatentTensor& x_start, const ViewCondition& condition, int start_step,
                               Denoiser& backend, const NoiseSchedule& schedule, std::uint64_t master_seed,
                               const VcjdOptions& options = {});

/// Standard-normal canvas draw for the start of a run.
LatentTensor initial_noise(Dims dims, std::uint64_t master_seed, std::uint32_t phase = 0);

}  // namespace dts
