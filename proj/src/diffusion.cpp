#include "dts/diffusion.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "dts/error.hpp"
#include "dts/simd.hpp"

namespace dts {
namespace {

std::size_t worker_count(const VcjdOptions& options, const Capabilities& caps, std::size_t jobs) {
  std::size_t n = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  if (caps.max_concurrency) n = std::min(n, caps.max_concurrency);
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs fn(i) for i in [0, n). The lowest-index failure is rethrown so error
// reporting does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<View> denoise_views(std::span<const View> views, int t, std::span<const ViewCondition> conditions,
                                Denoiser& backend, const NoiseSchedule& schedule, const RngStream& streams,
                                const VcjdOptions& options) {
  if (views.size() != conditions.size()) throw DimMismatch("views and conditions are not index-aligned");
  std::vector<View> out(views.size());
  const auto workers = worker_count(options, backend.capabilities(), views.size());
  parallel_for(views.size(), workers, [&](std::size_t i) {
    const Window& w = views[i].window;
    Rng rng = streams.at({StreamPurpose::Denoise, options.phase, static_cast<std::uint32_t>(t),
                          static_cast<std::uint32_t>(w.index)});
    try {
      out[i] = {denoise_step(views[i].latent, t, conditions[i], backend, schedule, rng, {options.eta}), w};
    } catch (const BackendError& e) {
      throw BackendError("window " + std::to_string(w.index) + ": " + e.what());
    }
  });
  return out;
}

void check_start_step(int start_step, const NoiseSchedule& schedule) {
  if (start_step < 1 || start_step > schedule.steps())
    throw StepOutOfRange("start step " + std::to_string(start_step) + " outside [1, " +
                         std::to_string(schedule.steps()) + "]");
}

}  // namespace

LatentTensor forward_noise(const LatentTensor& z0, int t, const NoiseSchedule& schedule, Rng& rng) {
  const double a = schedule.alpha_bar(t);
  if (t == 0) return z0;
  LatentTensor eps(z0.dims());
  rng.fill_normal(eps.values());
  LatentTensor out(z0.dims());
  simd::active().scale_add(out.values(), static_cast<float>(std::sqrt(a)), z0.values(),
                           static_cast<float>(std::sqrt(1.0 - a)), eps.values());
  return out;
}

LatentTensor denoise_step(const LatentTensor& x_t, int t, const ViewCondition& condition, Denoiser& backend,
                          const NoiseSchedule& schedule, Rng& rng, const StepOptions& options) {
  if (t < 1 || t > schedule.steps())
    throw StepOutOfRange("denoise step " + std::to_string(t) + " outside [1, " + std::to_string(schedule.steps()) + "]");
  LatentTensor eps;
  try {
    eps = backend.predict_epsilon(x_t, t, schedule, condition);
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError(std::string("backend failed: ") + e.what());
  }
  if (eps.dims() != x_t.dims()) throw BackendError("backend returned a tensor of the wrong shape");
  if (!eps.all_finite()) throw BackendError("backend returned non-finite values");

  const double a_t = schedule.alpha_bar(t);
  const double a_prev = schedule.alpha_bar(t - 1);
  double sigma = 0.0;
  if (options.eta > 0.0)
    sigma = options.eta * std::sqrt((1.0 - a_prev) / (1.0 - a_t)) * std::sqrt(1.0 - a_t / a_prev);
  const double dir = std::sqrt(std::max(0.0, 1.0 - a_prev - sigma * sigma));

  const auto& k = simd::active();
  LatentTensor out(x_t.dims());
  k.ddim_update(out.values(), x_t.values(), eps.values(), static_cast<float>(std::sqrt(a_t)),
                static_cast<float>(std::sqrt(1.0 - a_t)), static_cast<float>(std::sqrt(a_prev)),
                static_cast<float>(dir));
  if (sigma > 0.0) {
    LatentTensor noise(x_t.dims());
    rng.fill_normal(noise.values());
    k.scale_add(out.values(), 1.0f, out.values(), static_cast<float>(sigma), noise.values());
  }
  return out;
}

std::vector<ViewCondition> view_conditions(const ConditionSet& conditions, const WindowPlan& plan) {
  std::vector<ViewCondition> out;
  out.reserve(plan.windows.size());
  if (conditions.keypoint_map.empty()) {
    for (const auto& w : plan.windows) out.push_back(blank_condition(w.size, conditions.global_caption));
    return out;
  }
  if (conditions.extent() != plan.canvas) throw DimMismatch("condition set does not match the plan canvas");
  for (const auto& w : plan.windows) out.push_back(crop_condition(conditions, w));
  return out;
}

std::vector<View> vcjd_step(std::span<const View> views, int t, std::span<const ViewCondition> conditions,
                            Denoiser& backend, const NoiseSchedule& schedule, const RngStream& streams,
                            Extent canvas, const VcjdOptions& options) {
  auto denoised = denoise_views(views, t, conditions, backend, schedule, streams, options);
  const LatentTensor z = stitch(denoised, canvas);
  std::vector<View> out;
  out.reserve(views.size());
  for (const auto& v : views) out.push_back({crop(z, v.window), v.window});
  return out;
}

LatentTensor vcjd(const LatentTensor& z_start, const ConditionSet& conditions, int start_step, const WindowPlan& plan,
                  Denoiser& backend, const NoiseSchedule& schedule, std::uint64_t master_seed,
                  const VcjdOptions& options) {
  check_start_step(start_step, schedule);
  if (!plan.covers_canvas()) throw CoverageError("window plan does not cover the canvas");
  const RngStream streams(master_seed);
  const auto conds = view_conditions(conditions, plan);
  std::vector<View> views = split(z_start, plan);

  if (options.order == StitchOrder::AfterDenoise) {
    LatentTensor z = z_start;
    for (int t = start_step; t >= 1; --t) {
      auto denoised = denoise_views(views, t, conds, backend, schedule, streams, options);
      z = stitch(denoised, plan.canvas);
      views = split(z, plan);
    }
    return z;
  }
  for (int t = start_step; t >= 1; --t) {
    views = split(stitch(views, plan.canvas), plan);
    views = denoise_views(views, t, conds, backend, schedule, streams, options);
  }
  return stitch(views, plan.canvas);
}

LatentTensor sample_sequential(const LatentTensor& x_start, const ViewCondition& condition, int start_step,
                               Denoiser& backend, const NoiseSchedule& schedule, std::uint64_t master_seed,
                               const VcjdOptions& options) {
  check_start_step(start_step, schedule);
  const RngStream streams(master_seed);
  LatentTensor x = x_start;
  for (int t = start_step; t >= 1; --t) {
    Rng rng = streams.at({StreamPurpose::Denoise, options.phase, static_cast<std::uint32_t>(t), 0});
    x = denoise_step(x, t, condition, backend, schedule, rng, {options.eta});
  }
  return x;
}

LatentTensor initial_noise(Dims dims, std::uint64_t master_seed, std::uint32_t phase) {
  LatentTensor z(dims);
  Rng rng = RngStream(master_seed).at({StreamPurpose::Init, phase, 0, 0});
  rng.fill_normal(z.values());
  return z;
}

}  // namespace dts
