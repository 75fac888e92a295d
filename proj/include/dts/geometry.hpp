#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "dts/tensor.hpp"

namespace dts {

/// One view: a fixed-size rectangle of the latent canvas.
struct Window {
  std::size_t index = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  Extent size;

  std::size_t row_end() const { return row + size.height; }
  std::size_t col_end() const { return col + size.width; }
  bool contains(std::size_t r, std::size_t c) const { return r >= row && r < row_end() && c >= col && c < col_end(); }
  bool fits(Extent canvas) const { return row_end() <= canvas.height && col_end() <= canvas.width; }
  friend bool operator==(const Window&, const Window&) = default;
};

struct WindowPlan {
  Extent canvas;
  std::vector<Window> windows;

  /// Number of windows covering each canvas pixel (row-major).
  std::vector<std::size_t> coverage() const;
  bool covers_canvas() const;
};

/// Regular grid of `window`-sized views stepping by `stride`; the last row and
/// column are clamped to the canvas edge so the union covers the canvas.
WindowPlan plan_windows(Extent canvas, Extent window, std::size_t stride);

/// Plan with a single window spanning the canvas.
WindowPlan single_window_plan(Extent canvas);

/// Window contents of `z`.
LatentTensor crop(const LatentTensor& z, const Window& w);

/// Canvas-sized tensor holding `x` inside `w` and zeros elsewhere.
LatentTensor embed(const LatentTensor& x, const Window& w, Extent canvas);

struct View {
  LatentTensor latent;
  Window window;
};

/// Per-pixel mean over every view covering the pixel (accumulated in double).
/// Throws CoverageError when a canvas pixel is not covered.
LatentTensor stitch(std::span<const View> views, Extent canvas);

/// crop() for every window of the plan.
std::vector<View> split(const LatentTensor& z, const WindowPlan& plan);

}  // namespace dts
