#include "dts/geometry.hpp"

#include <algorithm>
#include <string>

#include "dts/error.hpp"
#include "dts/simd.hpp"

namespace dts {
namespace {

std::vector<std::size_t> axis_origins(std::size_t canvas, std::size_t window, std::size_t stride) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (true) {
    out.push_back(pos);
    if (pos + window >= canvas) break;
    pos += stride;
    if (pos + window > canvas) pos = canvas - window;
  }
  return out;
}

std::string describe(const Window& w) {
  return "window " + std::to_string(w.index) + " at (" + std::to_string(w.row) + "," + std::to_string(w.col) +
         ") size " + std::to_string(w.size.height) + "x" + std::to_string(w.size.width);
}

}  // namespace

std::vector<std::size_t> WindowPlan::coverage() const {
  std::vector<std::size_t> cov(canvas.area(), 0);
  for (const auto& w : windows)
    for (std::size_t r = w.row; r < std::min(w.row_end(), canvas.height); ++r)
      for (std::size_t c = w.col; c < std::min(w.col_end(), canvas.width); ++c) cov[r * canvas.width + c]++;
  return cov;
}

bool WindowPlan::covers_canvas() const {
  const auto cov = coverage();
  return std::none_of(cov.begin(), cov.end(), [](std::size_t n) { return n == 0; });
}

WindowPlan plan_windows(Extent canvas, Extent window, std::size_t stride) {
  if (canvas.height == 0 || canvas.width == 0 || window.height == 0 || window.width == 0)
    throw WindowTooLarge("canvas and window must be non-empty");
  if (window.height > canvas.height || window.width > canvas.width)
    throw WindowTooLarge("window " + std::to_string(window.height) + "x" + std::to_string(window.width) +
                         " exceeds canvas " + std::to_string(canvas.height) + "x" + std::to_string(canvas.width));
  if (stride == 0) throw Error("stride must be at least 1");
  if ((stride > window.height && canvas.height > window.height) || (stride > window.width && canvas.width > window.width))
    throw GeometryError("stride " + std::to_string(stride) + " exceeds the window and would leave gaps");

  WindowPlan plan{canvas, {}};
  for (std::size_t r : axis_origins(canvas.height, window.height, stride))
    for (std::size_t c : axis_origins(canvas.width, window.width, stride))
      plan.windows.push_back({plan.windows.size(), r, c, window});
  return plan;
}

WindowPlan single_window_plan(Extent canvas) { return plan_windows(canvas, canvas, 1); }

LatentTensor crop(const LatentTensor& z, const Window& w) {
  if (!w.fits(z.dims().extent())) throw DimMismatch(describe(w) + " lies outside the tensor");
  LatentTensor out({w.size.height, w.size.width, z.channels()});
  for (std::size_t r = 0; r < w.size.height; ++r) {
    auto src = z.row_span(w.row + r, w.col, w.size.width);
    std::copy(src.begin(), src.end(), out.row_span(r, 0, w.size.width).begin());
  }
  return out;
}

LatentTensor embed(const LatentTensor& x, const Window& w, Extent canvas) {
  if (x.dims().extent() != w.size) throw DimMismatch("tensor does not match " + describe(w));
  if (!w.fits(canvas)) throw DimMismatch(describe(w) + " lies outside the canvas");
  LatentTensor out({canvas.height, canvas.width, x.channels()});
  for (std::size_t r = 0; r < w.size.height; ++r) {
    auto src = x.row_span(r, 0, w.size.width);
    std::copy(src.begin(), src.end(), out.row_span(w.row + r, w.col, w.size.width).begin());
  }
  return out;
}

LatentTensor stitch(std::span<const View> views, Extent canvas) {
  if (views.empty()) throw CoverageError("no views to stitch");
  const std::size_t channels = views.front().latent.channels();
  const std::size_t row_len = canvas.width * channels;
  std::vector<double> sum(canvas.area() * channels, 0.0);
  std::vector<double> count(sum.size(), 0.0);
  const auto& k = simd::active();

  for (const View& v : views) {
    const Window& w = v.window;
    if (v.latent.dims().extent() != w.size || v.latent.channels() != channels)
      throw DimMismatch("view tensor does not match " + describe(w));
    if (!w.fits(canvas)) throw DimMismatch(describe(w) + " lies outside the canvas");
    const std::size_t span_len = w.size.width * channels;
    for (std::size_t r = 0; r < w.size.height; ++r) {
      const std::size_t base = (w.row + r) * row_len + w.col * channels;
      k.accumulate(std::span(sum).subspan(base, span_len), v.latent.row_span(r, 0, w.size.width));
      k.add_constant(std::span(count).subspan(base, span_len), 1.0);
    }
  }

  for (std::size_t i = 0; i < count.size(); i += channels) {
    if (count[i] == 0.0) {
      const std::size_t p = i / channels;
      throw CoverageError("canvas pixel (" + std::to_string(p / canvas.width) + "," +
                          std::to_string(p % canvas.width) + ") is not covered by any window");
    }
  }
  LatentTensor out({canvas.height, canvas.width, channels});
  k.divide(out.values(), sum, count);
  return out;
}

std::vector<View> split(const LatentTensor& z, const WindowPlan& plan) {
  if (z.dims().extent() != plan.canvas) throw DimMismatch("tensor does not match the plan canvas");
  std::vector<View> views;
  views.reserve(plan.windows.size());
  for (const auto& w : plan.windows) views.push_back({crop(z, w), w});
  return views;
}

}  // namespace dts
