#include <algorithm>

#include "dts/layout.hpp"

namespace dts::layout {
namespace {

// Ratio with the empty-set convention: nothing requested and nothing
// produced counts as a perfect score.
double ratio(int num, int den, bool other_side_empty) {
  if (den > 0) return static_cast<double>(num) / den;
  return other_side_empty ? 1.0 : 0.0;
}

CategoryScore score(int expected, int generated) {
  CategoryScore s;
  s.expected = expected;
  s.generated = generated;
  s.matched = std::min(expected, generated);
  s.precision = ratio(s.matched, generated, expected == 0);
  s.recall = ratio(s.matched, expected, generated == 0);
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

}  // namespace

double f1_score(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0 ? 2.0 * precision * recall / sum : 0.0;
}

MatchReport numerical_matching(const CategoryCounts& expected, const SceneLayout& layout) {
  int humans = 0;
  int objects = 0;
  for (const auto& inst : layout.instances) (inst.kind == InstanceKind::Human ? humans : objects)++;

  MatchReport report;
  int total_expected = 0, total_generated = 0, total_matched = 0;
  auto add = [&](const std::optional<int>& want, int have, std::optional<CategoryScore>& slot) {
    if (!want) return;
    slot = score(std::max(0, *want), have);
    total_expected += slot->expected;
    total_generated += slot->generated;
    total_matched += slot->matched;
  };
  add(expected.groups, static_cast<int>(layout.groups.size()), report.groups);
  add(expected.humans, humans, report.humans);
  add(expected.objects, objects, report.objects);

  report.precision = ratio(total_matched, total_generated, total_expected == 0);
  report.recall = ratio(total_matched, total_expected, total_generated == 0);
  report.f1 = f1_score(report.precision, report.recall);
  return report;
}

double spatial_matching(const SceneLayout& layout, Side side) {
  if (layout.groups.empty()) return 1.0;
  const double mid = 0.5 * layout.canvas.width;
  std::size_t ok = 0;
  for (const auto& g : layout.groups) {
    const double cx = g.bbox.center_x();
    if (side == Side::Left ? cx < mid : cx > mid) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(layout.groups.size());
}

double inclusion_check(const SceneLayout& layout) {
  std::size_t assigned = 0;
  std::size_t passing = 0;
  for (const auto& g : layout.groups) {
    for (const auto& id : g.member_ids) {
      const InstanceLayout* inst = layout.find_instance(id);
      if (!inst || !inst->keypoints) continue;
      ++assigned;
      const bool inside = std::all_of(inst->keypoints->begin(), inst->keypoints->end(), [&](const Joint& j) {
        return !j.visible || (j.x >= g.bbox.x0 && j.x <= g.bbox.x1 && j.y >= g.bbox.y0 && j.y <= g.bbox.y1);
      });
      if (inside) ++passing;
    }
  }
  return assigned ? static_cast<double>(passing) / static_cast<double>(assigned) : 1.0;
}

}  // namespace dts::layout
