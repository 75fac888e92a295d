#pragma once

#include <string>
#include <vector>

#include "dts/geometry.hpp"
#include "dts/layout.hpp"
#include "dts/tensor.hpp"

namespace dts {

/// Dense caption y_n with its binary spatial mask s_n.
struct DensePair {
  std::string caption;
  Mask mask;
  friend bool operator==(const DensePair&, const DensePair&) = default;
};

/// Canvas-level condition set: full caption, keypoint map and dense pairs.
struct ConditionSet {
  std::string global_caption;
  LatentTensor keypoint_map;
  std::vector<DensePair> dense_pairs;

  Extent extent() const { return keypoint_map.dims().extent(); }
  /// Throws DimMismatch when a component disagrees with the canvas.
  void check_consistent() const;
};

/// Condition of one view, window-sized.
struct ViewCondition {
  std::string full_text;
  LatentTensor keypoint_map;
  std::vector<DensePair> dense_pairs;
  friend bool operator==(const ViewCondition&, const ViewCondition&) = default;
};

/// Crops keypoint map and masks to the window; pairs whose cropped mask is
/// empty are dropped; the full text is kept.
ViewCondition crop_condition(const ConditionSet& conditions, const Window& w);

/// Empty condition (caption only) of a given size; for condition-blind runs.
ViewCondition blank_condition(Extent extent, std::string text = {});

enum class HumanMaskMode { Box, Skeleton };

struct RasterOptions {
  std::size_t keypoint_channels = 1;  // 1 or 3; channels carry the same skeleton
  int line_radius = 0;                // limb dilation radius in raster pixels
  HumanMaskMode human_mask = HumanMaskMode::Box;
  int mask_radius = 1;                // dilation for skeleton masks
};

/// Rasterizes a layout at `ceil(pixels / latent_scale)` resolution.
ConditionSet rasterize_conditions(const layout::SceneLayout& layout, int latent_scale,
                                  const RasterOptions& options = {});

/// Rasterizes a layout onto an arbitrary target raster (pyramid phases).
ConditionSet rasterize_conditions_to(const layout::SceneLayout& layout, Extent target,
                                     const RasterOptions& options = {});

/// Integer line from (r0,c0) to (r1,c1) inclusive, Bresenham order.
std::vector<std::pair<long, long>> line_pixels(long r0, long c0, long r1, long c1);

}  // namespace dts
