#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dts/conditions.hpp"
#include "dts/denoiser.hpp"
#include "dts/diffusion.hpp"
#include "dts/geometry.hpp"
#include "dts/rng.hpp"
#include "dts/schedule.hpp"

namespace dts {

enum class InterpMethod { Bilinear, Lanczos };
enum class Boundary { Clamp, Periodic };

/// Output extent of one upscale: round(dims * alpha).
Extent scaled_extent(Extent in, double alpha);

/// Separable upscale by `alpha` (> 1) with half-pixel sample centers.
/// Channels are resampled independently.
LatentTensor interpolate(const LatentTensor& z, double alpha, InterpMethod method = InterpMethod::Bilinear,
                         Boundary boundary = Boundary::Clamp);

/// Which output pixels were replaced, and from where.
struct PerturbTrace {
  std::vector<std::uint8_t> replaced;  // per output pixel
  std::vector<std::size_t> source;     // flat source pixel index in z_low (valid where replaced)
};

/// With probability `gamma`, replaces each pixel of `z_interp` by a pixel of
/// `z_low` near (round(h/alpha), round(w/alpha)), offset uniformly within
/// +-d on both axes and clamped to bounds.
LatentTensor pixel_perturb(const LatentTensor& z_low, const LatentTensor& z_interp, double alpha, double gamma,
                           int d, Rng& rng, PerturbTrace* trace = nullptr);

struct PyramidConfig {
  int phases = 2;                     // number of upscale-and-refine phases
  double alpha = 2.0;
  double gamma = 0.05;
  int d = 1;
  std::vector<double> refine_steps;   // normalized start step per phase (size = phases)
  double initial_step = 1.0;          // normalized start of the base run
  InterpMethod method = InterpMethod::Bilinear;

  static PyramidConfig with_phases(int phases);
  void validate() const;
};

using ConditionProvider = std::function<ConditionSet(Extent)>;
using PlanFactory = std::function<WindowPlan(Extent)>;

/// Plans `window`-sized views (shrunk to the canvas when larger) at `stride`.
PlanFactory grid_plan_factory(Extent window, std::size_t stride);

struct PhaseRecord {
  Extent canvas;
  std::size_t windows = 0;
  int start_step = 0;
};

struct PyramidResult {
  LatentTensor output;
  std::vector<PhaseRecord> phases;
};

/// Base joint run from noise, then per phase: upscale, perturb, re-noise to
/// the refinement step and run the joint sampler again.
PyramidResult pppi(Extent base, std::size_t channels, const ConditionProvider& conditions, const PyramidConfig& config,
                   const PlanFactory& plans, Denoiser& backend, const NoiseSchedule& schedule,
                   std::uint64_t master_seed, const VcjdOptions& options = {});

}  // namespace dts
