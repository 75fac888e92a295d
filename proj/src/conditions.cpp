#include "dts/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "dts/error.hpp"

namespace dts {

void ConditionSet::check_consistent() const {
  const Extent e = extent();
  for (const auto& p : dense_pairs)
    if (p.mask.extent != e) throw DimMismatch("dense-caption mask does not match the keypoint map extent");
}

ViewCondition crop_condition(const ConditionSet& conditions, const Window& w) {
  conditions.check_consistent();
  if (!w.fits(conditions.extent())) throw DimMismatch("window lies outside the condition canvas");
  ViewCondition out;
  out.full_text = conditions.global_caption;
  out.keypoint_map = crop(conditions.keypoint_map, w);
  for (const auto& pair : conditions.dense_pairs) {
    Mask m(w.size);
    for (std::size_t r = 0; r < w.size.height; ++r)
      for (std::size_t c = 0; c < w.size.width; ++c) m.at(r, c) = pair.mask.at(w.row + r, w.col + c);
    if (m.any()) out.dense_pairs.push_back({pair.caption, std::move(m)});
  }
  return out;
}

ViewCondition blank_condition(Extent extent, std::string text) {
  return {std::move(text), LatentTensor({extent.height, extent.width, 1}), {}};
}

std::vector<std::pair<long, long>> line_pixels(long r0, long c0, long r1, long c1) {
  std::vector<std::pair<long, long>> out;
  const long dr = std::labs(r1 - r0), dc = std::labs(c1 - c0);
  const long sr = r0 < r1 ? 1 : -1, sc = c0 < c1 ? 1 : -1;
  long err = dc - dr;
  long r = r0, c = c0;
  while (true) {
    out.emplace_back(r, c);
    if (r == r1 && c == c1) break;
    const long e2 = 2 * err;
    if (e2 > -dr) {
      err -= dr;
      c += sc;
    }
    if (e2 < dc) {
      err += dc;
      r += sr;
    }
  }
  return out;
}

namespace {

struct Scale {
  double fx, fy;
};

template <typename Plot>
void stamp_disc(long r, long c, int radius, Extent e, Plot&& plot) {
  for (long dr = -radius; dr <= radius; ++dr)
    for (long dc = -radius; dc <= radius; ++dc) {
      if (dr * dr + dc * dc > static_cast<long>(radius) * radius) continue;
      const long rr = r + dr, cc = c + dc;
      if (rr < 0 || cc < 0 || rr >= static_cast<long>(e.height) || cc >= static_cast<long>(e.width)) continue;
      plot(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
    }
}

std::pair<long, long> joint_cell(const layout::Joint& j, Scale s, Extent e) {
  const long r = std::clamp(static_cast<long>(std::floor(j.y * s.fy)), 0L, static_cast<long>(e.height) - 1);
  const long c = std::clamp(static_cast<long>(std::floor(j.x * s.fx)), 0L, static_cast<long>(e.width) - 1);
  return {r, c};
}

template <typename Plot>
void draw_skeleton(const layout::Keypoints& kp, Scale s, Extent e, int radius, Plot&& plot) {
  for (const auto& [a, b] : layout::kLimbs) {
    if (!kp[a].visible || !kp[b].visible) continue;
    const auto [r0, c0] = joint_cell(kp[a], s, e);
    const auto [r1, c1] = joint_cell(kp[b], s, e);
    for (const auto& [r, c] : line_pixels(r0, c0, r1, c1)) stamp_disc(r, c, radius, e, plot);
  }
  for (const auto& j : kp) {
    if (!j.visible) continue;
    const auto [r, c] = joint_cell(j, s, e);
    stamp_disc(r, c, radius, e, plot);
  }
}

Mask box_mask(const layout::BoundingBox& b, Scale s, Extent e) {
  Mask m(e);
  const auto lo_r = static_cast<std::size_t>(std::max(0.0, std::floor(b.y0 * s.fy)));
  const auto lo_c = static_cast<std::size_t>(std::max(0.0, std::floor(b.x0 * s.fx)));
  const auto hi_r = std::min(e.height, static_cast<std::size_t>(std::max(0.0, std::ceil(b.y1 * s.fy))));
  const auto hi_c = std::min(e.width, static_cast<std::size_t>(std::max(0.0, std::ceil(b.x1 * s.fx))));
  for (std::size_t r = lo_r; r < hi_r; ++r)
    for (std::size_t c = lo_c; c < hi_c; ++c) m.at(r, c) = 1;
  return m;
}

ConditionSet rasterize(const layout::SceneLayout& layout, Extent target, Scale s, const RasterOptions& opt) {
  if (opt.keypoint_channels != 1 && opt.keypoint_channels != 3)
    throw Error("keypoint map must have 1 or 3 channels");
  ConditionSet out;
  out.global_caption = layout.global_caption;
  out.keypoint_map = LatentTensor({target.height, target.width, opt.keypoint_channels});

  for (const auto& inst : layout.instances) {
    if (inst.kind == layout::InstanceKind::Human && inst.keypoints) {
      draw_skeleton(*inst.keypoints, s, target, opt.line_radius, [&](std::size_t r, std::size_t c) {
        for (float& v : out.keypoint_map.pixel(r, c)) v = 1.0f;
      });
    }
    Mask m;
    if (inst.kind == layout::InstanceKind::Human && inst.keypoints && opt.human_mask == HumanMaskMode::Skeleton) {
      m = Mask(target);
      draw_skeleton(*inst.keypoints, s, target, std::max(opt.mask_radius, opt.line_radius),
                    [&](std::size_t r, std::size_t c) { m.at(r, c) = 1; });
    } else {
      m = box_mask(inst.bbox, s, target);
    }
    out.dense_pairs.push_back({inst.caption, std::move(m)});
  }
  return out;
}

}  // namespace

ConditionSet rasterize_conditions(const layout::SceneLayout& layout, int latent_scale, const RasterOptions& options) {
  if (latent_scale < 1) throw Error("latent scale must be at least 1");
  const auto up = [&](int px) { return static_cast<std::size_t>((px + latent_scale - 1) / latent_scale); };
  const Extent target{up(layout.canvas.height), up(layout.canvas.width)};
  const double f = 1.0 / latent_scale;
  return rasterize(layout, target, {f, f}, options);
}

ConditionSet rasterize_conditions_to(const layout::SceneLayout& layout, Extent target, const RasterOptions& options) {
  if (target.area() == 0 || layout.canvas.width < 1 || layout.canvas.height < 1)
    throw DimMismatch("empty rasterization target");
  const Scale s{static_cast<double>(target.width) / layout.canvas.width,
                static_cast<double>(target.height) / layout.canvas.height};
  return rasterize(layout, target, s, options);
}

}  // namespace dts
