#include <array>
#include <cmath>
#include <string>

#include "dts/error.hpp"
#include "dts/layout.hpp"
#include "dts/rng.hpp"

namespace dts::layout {
namespace {

constexpr double kMinBoxSide = 8.0;

// Standing pose, normalized to the person box.
constexpr std::array<std::array<double, 2>, kJointCount> kPoseTemplate{{
    {0.50, 0.08}, {0.46, 0.06}, {0.54, 0.06}, {0.42, 0.08}, {0.58, 0.08}, {0.35, 0.22},
    {0.65, 0.22}, {0.28, 0.38}, {0.72, 0.38}, {0.25, 0.52}, {0.75, 0.52}, {0.40, 0.55},
    {0.60, 0.55}, {0.40, 0.75}, {0.60, 0.75}, {0.40, 0.93}, {0.60, 0.93},
}};

constexpr std::array<const char*, 6> kColors{"red", "blue", "green", "yellow", "black", "white"};
constexpr std::array<const char*, 4> kPeople{"man", "woman", "child", "person"};
constexpr std::array<const char*, 4> kGarments{"jacket", "dress", "shirt", "coat"};
constexpr std::array<const char*, 5> kObjects{"bicycle", "umbrella", "bench", "dog", "backpack"};

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& words) {
  return words[static_cast<std::size_t>(rng.uniform_int(0, N - 1))];
}

struct Region {
  double x0, y0, x1, y1;
};

// Splits a region into a near-square grid with one cell per item.
std::vector<Region> grid_cells(const Region& r, int n) {
  std::vector<Region> cells;
  if (n <= 0) return cells;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  const double cw = (r.x1 - r.x0) / cols;
  const double ch = (r.y1 - r.y0) / rows;
  for (int k = 0; k < n; ++k) {
    const int cx = k % cols;
    const int cy = k / cols;
    cells.push_back({r.x0 + cx * cw, r.y0 + cy * ch, r.x0 + (cx + 1) * cw, r.y0 + (cy + 1) * ch});
  }
  return cells;
}

BoundingBox box_in(const Region& cell, Rng& rng) {
  const double mx = 0.08 * (cell.x1 - cell.x0);
  const double my = 0.08 * (cell.y1 - cell.y0);
  const double x0 = cell.x0 + mx * (0.5 + (rng.uniform() - 0.5));
  const double y0 = cell.y0 + my * (0.5 + (rng.uniform() - 0.5));
  BoundingBox b{std::ceil(x0), std::ceil(y0), std::floor(x0 + (cell.x1 - cell.x0) - 2 * mx),
                std::floor(y0 + (cell.y1 - cell.y0) - 2 * my)};
  if (b.width() < kMinBoxSide || b.height() < kMinBoxSide)
    throw InfeasibleError("requested counts do not fit the canvas without degenerate boxes");
  return b;
}

Keypoints pose_in(const BoundingBox& b, Rng& rng) {
  Keypoints kp{};
  for (std::size_t j = 0; j < kJointCount; ++j) {
    const double u = kPoseTemplate[j][0] + 0.02 * (rng.uniform() - 0.5);
    const double v = kPoseTemplate[j][1] + 0.02 * (rng.uniform() - 0.5);
    kp[j] = {std::floor(b.x0 + u * b.width()), std::floor(b.y0 + v * b.height()), 1};
  }
  return kp;
}

}  // namespace

SceneLayout synthesize_layout_procedural(const SynthesisSpec& spec) {
  if (spec.groups < 0 || spec.humans < 0 || spec.objects < 0) throw InfeasibleError("negative counts");
  if (spec.canvas.width < 1 || spec.canvas.height < 1) throw InfeasibleError("empty canvas");

  Rng rng = RngStream(spec.seed).at({StreamPurpose::Layout, 0, 0, 0});
  SceneLayout out;
  out.canvas = spec.canvas;

  const double w = spec.canvas.width;
  const double h = spec.canvas.height;
  std::vector<Region> regions;
  if (spec.groups > 0) {
    const double col = w / spec.groups;
    for (int g = 0; g < spec.groups; ++g) {
      Region r{std::ceil(g * col + 0.04 * col), std::ceil(0.05 * h), std::floor((g + 1) * col - 0.04 * col),
               std::floor(0.95 * h)};
      if (r.x1 - r.x0 < kMinBoxSide || r.y1 - r.y0 < kMinBoxSide)
        throw InfeasibleError("requested groups do not fit the canvas");
      GroupLayout gl;
      gl.id = "g" + std::to_string(g + 1);
      gl.bbox = {r.x0, r.y0, r.x1, r.y1};
      out.groups.push_back(std::move(gl));
      regions.push_back(r);
    }
  } else {
    regions.push_back({0.0, 0.0, w, h});
  }

  // Round-robin humans then objects over the regions.
  const int total = spec.humans + spec.objects;
  std::vector<int> per_region(regions.size(), 0);
  for (int k = 0; k < total; ++k) per_region[static_cast<std::size_t>(k) % regions.size()]++;
  std::vector<std::vector<Region>> cells(regions.size());
  for (std::size_t r = 0; r < regions.size(); ++r) cells[r] = grid_cells(regions[r], per_region[r]);
  std::vector<std::size_t> next_cell(regions.size(), 0);
  std::vector<int> humans_in(regions.size(), 0), objects_in(regions.size(), 0);

  for (int k = 0; k < total; ++k) {
    const std::size_t r = static_cast<std::size_t>(k) % regions.size();
    const Region& cell = cells[r][next_cell[r]++];
    InstanceLayout inst;
    inst.bbox = box_in(cell, rng);
    if (k < spec.humans) {
      inst.kind = InstanceKind::Human;
      inst.id = "h" + std::to_string(k + 1);
      inst.caption = std::string("a ") + pick(rng, kPeople) + " wearing a " + pick(rng, kColors) + " " +
                     pick(rng, kGarments);
      inst.keypoints = pose_in(inst.bbox, rng);
      humans_in[r]++;
    } else {
      inst.kind = InstanceKind::Object;
      inst.id = "o" + std::to_string(k - spec.humans + 1);
      inst.caption = std::string("a ") + pick(rng, kColors) + " " + pick(rng, kObjects);
      objects_in[r]++;
    }
    if (spec.groups > 0) out.groups[r].member_ids.push_back(inst.id);
    out.instances.push_back(std::move(inst));
  }

  for (std::size_t g = 0; g < out.groups.size(); ++g)
    out.groups[g].caption = "a group of " + std::to_string(humans_in[g]) + " people with " +
                            std::to_string(objects_in[g]) + " objects";
  out.global_caption = "A scene with " + std::to_string(spec.groups) + " groups, " + std::to_string(spec.humans) +
                       " people and " + std::to_string(spec.objects) + " objects.";
  validate(out);
  return out;
}

}  // namespace dts::layout
