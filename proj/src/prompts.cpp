#include <charconv>
#include <sstream>

#include "dts/error.hpp"
#include "dts/layout.hpp"

namespace dts::layout {
namespace {

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

std::string fmt_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_box(const BoundingBox& b) {
  return "[" + fmt_number(b.x0) + ", " + fmt_number(b.y0) + ", " + fmt_number(b.x1) + ", " + fmt_number(b.y1) + "]";
}

std::string hierarchy_block(const HierarchySummary& s) {
  std::ostringstream out;
  out << "global: " << s.global_caption << "\n";
  out << "counts: groups=" << s.groups << " humans=" << s.humans << " objects=" << s.objects << "\n";
  for (std::size_t g = 0; g < s.group_details.size(); ++g) {
    const GroupSummary& d = s.group_details[g];
    out << "group " << (g + 1) << ": humans=" << d.humans << " objects=" << d.objects;
    if (d.bbox) out << " box=" << fmt_box(*d.bbox);
    out << " | " << d.caption << "\n";
  }
  out << "ungrouped: humans=" << s.ungrouped_humans << " objects=" << s.ungrouped_objects << "\n";
  return out.str();
}

// "key=value" with an integer value.
int int_field(std::string_view line, std::string_view key) {
  const std::string needle = std::string(key) + "=";
  const auto pos = line.find(needle);
  if (pos == std::string_view::npos) throw SchemaError("prompt line lacks '" + needle + "': " + std::string(line));
  int v = 0;
  const char* first = line.data() + pos + needle.size();
  auto [ptr, ec] = std::from_chars(first, line.data() + line.size(), v);
  if (ec != std::errc() || ptr == first) throw SchemaError("bad integer for '" + std::string(key) + "'");
  return v;
}

BoundingBox parse_box_text(std::string_view text) {
  // text starts at '['
  double v[4];
  const char* p = text.data() + 1;
  const char* end = text.data() + text.size();
  for (int i = 0; i < 4; ++i) {
    while (p < end && (*p == ' ' || *p == ',')) ++p;
    auto [ptr, ec] = std::from_chars(p, end, v[i]);
    if (ec != std::errc()) throw SchemaError("malformed box in prompt");
    p = ptr;
  }
  while (p < end && *p == ' ') ++p;
  if (p >= end || *p != ']') throw SchemaError("malformed box in prompt");
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace

HierarchySummary summarize(const SceneLayout& layout, bool with_boxes) {
  HierarchySummary s;
  s.global_caption = one_line(layout.global_caption);
  s.groups = static_cast<int>(layout.groups.size());
  for (const auto& inst : layout.instances) (inst.kind == InstanceKind::Human ? s.humans : s.objects)++;
  for (const auto& g : layout.groups) {
    GroupSummary d;
    d.caption = one_line(g.caption);
    for (const auto& id : g.member_ids) {
      if (const auto* inst = layout.find_instance(id)) (inst->kind == InstanceKind::Human ? d.humans : d.objects)++;
    }
    if (with_boxes) d.bbox = g.bbox;
    s.group_details.push_back(std::move(d));
  }
  for (const auto* inst : layout.ungrouped()) (inst->kind == InstanceKind::Human ? s.ungrouped_humans : s.ungrouped_objects)++;
  return s;
}

PromptSet build_instruction_prompts(const SceneLayout& layout) {
  const HierarchySummary plain = summarize(layout, false);
  const HierarchySummary boxed = summarize(layout, true);
  PromptSet p;

  p.nat2hier = "### Instruction\n"
               "Rewrite the description as a hierarchy: the global scene, every group with its member counts, "
               "and the instances outside all groups.\n"
               "### Input\n" +
               plain.global_caption + "\n### Hierarchy\n" + hierarchy_block(plain);

  p.global_grounding = "### Instruction\n"
                       "Place one box [x0, y0, x1, y1] per group on a " +
                       std::to_string(layout.canvas.width) + "x" + std::to_string(layout.canvas.height) +
                       " canvas.\n### Hierarchy\n" + hierarchy_block(plain);

  p.local_grounding = "### Instruction\n"
                      "Place a box for every instance and 17 keypoints for every human, keeping members inside "
                      "their group box.\n### Hierarchy\n" +
                      hierarchy_block(boxed);
  return p;
}

HierarchySummary parse_grounding_reply(std::string_view text) {
  HierarchySummary s;
  bool saw_global = false, saw_counts = false, saw_ungrouped = false;
  // Prompts carry free text above the hierarchy section; replies may be bare.
  constexpr std::string_view kSection = "### Hierarchy\n";
  std::size_t start = 0;
  if (auto at = text.find(kSection); at != std::string_view::npos) start = at + kSection.size();
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;

    if (line.starts_with("global: ")) {
      s.global_caption = std::string(line.substr(8));
      saw_global = true;
    } else if (line.starts_with("counts: ")) {
      s.groups = int_field(line, "groups");
      s.humans = int_field(line, "humans");
      s.objects = int_field(line, "objects");
      saw_counts = true;
    } else if (line.starts_with("group ")) {
      const auto bar = line.find(" | ");
      if (bar == std::string_view::npos) throw SchemaError("group line lacks caption separator");
      const std::string_view head = line.substr(0, bar);
      GroupSummary d;
      d.humans = int_field(head, "humans");
      d.objects = int_field(head, "objects");
      if (auto b = head.find("box="); b != std::string_view::npos) d.bbox = parse_box_text(head.substr(b + 4));
      d.caption = std::string(line.substr(bar + 3));
      s.group_details.push_back(std::move(d));
    } else if (line.starts_with("ungrouped: ")) {
      s.ungrouped_humans = int_field(line, "humans");
      s.ungrouped_objects = int_field(line, "objects");
      saw_ungrouped = true;
    }
  }
  if (!saw_global || !saw_counts || !saw_ungrouped) throw SchemaError("text is not a canonical hierarchy");
  if (static_cast<int>(s.group_details.size()) != s.groups) throw SchemaError("group count mismatch in hierarchy");
  return s;
}

}  // namespace dts::layout
