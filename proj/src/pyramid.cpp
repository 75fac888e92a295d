#include "dts/pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dts/error.hpp"
#include "dts/simd.hpp"

namespace dts {
namespace {

struct Tap {
  std::size_t index;
  float weight;
};

std::size_t wrap(long i, std::size_t n, Boundary b) {
  const long m = static_cast<long>(n);
  if (b == Boundary::Periodic) return static_cast<std::size_t>(((i % m) + m) % m);
  return static_cast<std::size_t>(std::clamp(i, 0L, m - 1));
}

double lanczos3(double x) {
  constexpr double a = 3.0;
  if (x == 0.0) return 1.0;
  if (std::fabs(x) >= a) return 0.0;
  const double px = std::numbers::pi * x;
  return a * std::sin(px) * std::sin(px / a) / (px * px);
}

// Taps for every output coordinate along one axis.
std::vector<std::vector<Tap>> axis_taps(std::size_t in, std::size_t out, InterpMethod method, Boundary boundary) {
  std::vector<std::vector<Tap>> taps(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    const long base = static_cast<long>(std::floor(src));
    std::vector<std::pair<long, double>> raw;
    if (method == InterpMethod::Bilinear) {
      const double f = src - static_cast<double>(base);
      raw = {{base, 1.0 - f}, {base + 1, f}};
    } else {
      for (long i = base - 2; i <= base + 3; ++i) raw.emplace_back(i, lanczos3(src - static_cast<double>(i)));
    }
    double total = 0.0;
    for (const auto& r : raw) total += r.second;
    // Clamped or wrapped taps can land on the same source index; merge them.
    std::vector<std::pair<std::size_t, double>> merged;
    for (const auto& [i, w] : raw) {
      const std::size_t idx = wrap(i, in, boundary);
      auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& m) { return m.first == idx; });
      if (it == merged.end()) {
        merged.emplace_back(idx, w);
      } else {
        it->second += w;
      }
    }
    for (const auto& [idx, w] : merged)
      if (w != 0.0) taps[o].push_back({idx, static_cast<float>(w / total)});
  }
  return taps;
}

}  // namespace

Extent scaled_extent(Extent in, double alpha) {
  return {static_cast<std::size_t>(std::llround(static_cast<double>(in.height) * alpha)),
          static_cast<std::size_t>(std::llround(static_cast<double>(in.width) * alpha))};
}

LatentTensor interpolate(const LatentTensor& z, double alpha, InterpMethod method, Boundary boundary) {
  if (!(alpha > 1.0)) throw Error("interpolation factor must exceed 1");
  const Extent out_ext = scaled_extent(z.dims().extent(), alpha);
  const std::size_t ch = z.channels();
  const auto& k = simd::active();

  // Rows first: whole source rows combine with one weight each.
  const auto row_taps = axis_taps(z.height(), out_ext.height, method, boundary);
  LatentTensor tall({out_ext.height, z.width(), ch});
  for (std::size_t o = 0; o < out_ext.height; ++o)
    for (const Tap& t : row_taps[o]) k.axpy(tall.row_span(o, 0, z.width()), t.weight, z.row_span(t.index, 0, z.width()));

  const auto col_taps = axis_taps(z.width(), out_ext.width, method, boundary);
  LatentTensor out({out_ext.height, out_ext.width, ch});
  for (std::size_t r = 0; r < out_ext.height; ++r)
    for (std::size_t o = 0; o < out_ext.width; ++o) {
      auto dst = out.pixel(r, o);
      for (const Tap& t : col_taps[o]) k.axpy(dst, t.weight, tall.pixel(r, t.index));
    }
  return out;
}

LatentTensor pixel_perturb(const LatentTensor& z_low, const LatentTensor& z_interp, double alpha, double gamma, int d,
                           Rng& rng, PerturbTrace* trace) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("perturbation probability must lie in [0, 1]");
  if (d < 0) throw Error("perturbation distance must be non-negative");
  if (!(alpha >= 1.0)) throw Error("perturbation scale factor must be at least 1");
  if (z_interp.dims().extent() != scaled_extent(z_low.dims().extent(), alpha) ||
      z_interp.channels() != z_low.channels())
    throw DimMismatch("interpolated tensor does not match round(low-res dims * alpha)");

  LatentTensor out = z_interp;
  const long hl = static_cast<long>(z_low.height());
  const long wl = static_cast<long>(z_low.width());
  if (trace) {
    trace->replaced.assign(out.height() * out.width(), 0);
    trace->source.assign(out.height() * out.width(), 0);
  }
  for (std::size_t h = 0; h < out.height(); ++h)
    for (std::size_t w = 0; w < out.width(); ++w) {
      if (!(rng.uniform() < gamma)) continue;
      const long dr = static_cast<long>(rng.uniform_int(-d, d));
      const long dc = static_cast<long>(rng.uniform_int(-d, d));
      const long sr = std::clamp(std::lround(static_cast<double>(h) / alpha) + dr, 0L, hl - 1);
      const long sc = std::clamp(std::lround(static_cast<double>(w) / alpha) + dc, 0L, wl - 1);
      auto src = z_low.pixel(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
      std::copy(src.begin(), src.end(), out.pixel(h, w).begin());
      if (trace) {
        const std::size_t p = h * out.width() + w;
        trace->replaced[p] = 1;
        trace->source[p] = static_cast<std::size_t>(sr * wl + sc);
      }
    }
  return out;
}

PyramidConfig PyramidConfig::with_phases(int phases) {
  PyramidConfig c;
  c.phases = phases;
  c.refine_steps.assign(static_cast<std::size_t>(std::max(0, phases)), 0.5);
  return c;
}

void PyramidConfig::validate() const {
  if (phases < 0) throw Error("pyramid phase count must be non-negative");
  if (static_cast<int>(refine_steps.size()) != phases)
    throw Error("expected " + std::to_string(phases) + " refinement steps, got " + std::to_string(refine_steps.size()));
  if (phases > 0 && !(alpha > 1.0)) throw Error("alpha must exceed 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("gamma must lie in [0, 1]");
  if (d < 0) throw Error("d must be non-negative");
  for (double t : refine_steps)
    if (!(t > 0.0 && t <= 1.0)) throw Error("refinement steps must lie in (0, 1]");
  if (!(initial_step > 0.0 && initial_step <= 1.0)) throw Error("initial step must lie in (0, 1]");
}

PlanFactory grid_plan_factory(Extent window, std::size_t stride) {
  return [window, stride](Extent canvas) {
    const Extent w{std::min(window.height, canvas.height), std::min(window.width, canvas.width)};
    return plan_windows(canvas, w, stride);
  };
}

PyramidResult pppi(Extent base, std::size_t channels, const ConditionProvider& conditions, const PyramidConfig& config,
                   const PlanFactory& plans, Denoiser& backend, const NoiseSchedule& schedule,
                   std::uint64_t master_seed, const VcjdOptions& options) {
  config.validate();
  const RngStream streams(master_seed);
  PyramidResult result;

  auto run_phase = [&](std::uint32_t phase, const LatentTensor& start, int start_step) {
    const Extent canvas = start.dims().extent();
    const WindowPlan plan = plans(canvas);
    VcjdOptions opts = options;
    opts.phase = phase;
    result.phases.push_back({canvas, plan.windows.size(), start_step});
    return vcjd(start, conditions(canvas), start_step, plan, backend, schedule, master_seed, opts);
  };

  const int t0 = std::max(1, schedule.index_for(config.initial_step));
  LatentTensor z = run_phase(0, initial_noise({base.height, base.width, channels}, master_seed, 0), t0);

  for (int p = 0; p < config.phases; ++p) {
    const auto phase = static_cast<std::uint32_t>(p + 1);
    const LatentTensor up = interpolate(z, config.alpha, config.method);
    Rng pert_rng = streams.at({StreamPurpose::Perturb, phase, 0, 0});
    const LatentTensor perturbed = pixel_perturb(z, up, config.alpha, config.gamma, config.d, pert_rng);
    const int tp = std::max(1, schedule.index_for(config.refine_steps[static_cast<std::size_t>(p)]));
    Rng fwd_rng = streams.at({StreamPurpose::Forward, phase, 0, 0});
    z = run_phase(phase, forward_noise(perturbed, tp, schedule, fwd_rng), tp);
  }
  result.output = std::move(z);
  return result;
}

}  // namespace dts
