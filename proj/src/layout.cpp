#include "dts/layout.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dts/error.hpp"

namespace dts::layout {

using Json = nlohmann::ordered_json;

std::string_view to_string(InstanceKind kind) { return kind == InstanceKind::Human ? "human" : "object"; }

const InstanceLayout* SceneLayout::find_instance(std::string_view id) const {
  for (const auto& inst : instances)
    if (inst.id == id) return &inst;
  return nullptr;
}

std::optional<std::size_t> SceneLayout::group_of(std::string_view instance_id) const {
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (const auto& m : groups[g].member_ids)
      if (m == instance_id) return g;
  return std::nullopt;
}

std::vector<const InstanceLayout*> SceneLayout::ungrouped() const {
  std::unordered_set<std::string> grouped;
  for (const auto& g : groups) grouped.insert(g.member_ids.begin(), g.member_ids.end());
  std::vector<const InstanceLayout*> out;
  for (const auto& inst : instances)
    if (!grouped.contains(inst.id)) out.push_back(&inst);
  return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void validate_box(const BoundingBox& b, const Canvas& canvas, const std::string& where) {
  for (double v : {b.x0, b.y0, b.x1, b.y1})
    if (!std::isfinite(v)) throw GeometryError(where + ": non-finite box coordinate");
  if (!(b.x0 < b.x1) || !(b.y0 < b.y1)) throw GeometryError(where + ": degenerate box");
  if (b.x0 < 0 || b.y0 < 0 || b.x1 > canvas.width || b.y1 > canvas.height)
    throw GeometryError(where + ": box outside canvas");
}

}  // namespace

void validate(const SceneLayout& layout) {
  const Canvas& c = layout.canvas;
  if (c.width < 1 || c.height < 1) throw GeometryError("canvas must be at least 1x1");

  std::unordered_set<std::string> ids;
  for (const auto& inst : layout.instances) {
    const std::string where = "instance '" + inst.id + "'";
    if (inst.id.empty()) throw SchemaError("instance with empty id");
    if (!ids.insert(inst.id).second) throw SchemaError("duplicate id '" + inst.id + "'");
    if (inst.caption.empty()) throw SchemaError(where + ": empty caption");
    validate_box(inst.bbox, c, where);
    if (inst.keypoints) {
      if (inst.kind == InstanceKind::Object) throw SchemaError(where + ": objects cannot carry keypoints");
      for (std::size_t j = 0; j < kJointCount; ++j) {
        const Joint& jt = (*inst.keypoints)[j];
        if (jt.visible != 0 && jt.visible != 1) throw SchemaError(where + ": visibility must be 0 or 1");
        if (!std::isfinite(jt.x) || !std::isfinite(jt.y)) throw GeometryError(where + ": non-finite joint");
        if (jt.visible && (jt.x < 0 || jt.y < 0 || jt.x >= c.width || jt.y >= c.height))
          throw GeometryError(where + ": visible joint " + std::to_string(j) + " outside canvas");
      }
    }
  }

  std::unordered_set<std::string> assigned;
  for (const auto& g : layout.groups) {
    const std::string where = "group '" + g.id + "'";
    if (g.id.empty()) throw SchemaError("group with empty id");
    if (!ids.insert(g.id).second) throw SchemaError("duplicate id '" + g.id + "'");
    validate_box(g.bbox, c, where);
    for (const auto& m : g.member_ids) {
      if (!layout.find_instance(m)) throw SchemaError(where + ": unknown member '" + m + "'");
      if (!assigned.insert(m).second) throw SchemaError("instance '" + m + "' belongs to more than one group");
    }
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing field '" + key + "'");
  return *it;
}

std::string require_string(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_string()) throw SchemaError(where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

double number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + ": expected a number");
  return v.get<double>();
}

BoundingBox parse_box(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4) throw SchemaError(where + ": bbox must be [x0,y0,x1,y1]");
  return {number(v[0], where), number(v[1], where), number(v[2], where), number(v[3], where)};
}

Keypoints parse_keypoints(const Json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": keypoints must be an array");
  if (v.size() != kJointCount)
    throw SchemaError(where + ": expected 17 keypoints, got " + std::to_string(v.size()));
  Keypoints kp{};
  for (std::size_t j = 0; j < kJointCount; ++j) {
    const Json& e = v[j];
    if (!e.is_array() || e.size() != 3) throw SchemaError(where + ": keypoint must be [x,y,v]");
    if (!e[2].is_number_integer()) throw SchemaError(where + ": visibility must be an integer");
    kp[j] = {number(e[0], where), number(e[1], where), e[2].get<int>()};
  }
  return kp;
}

Json emit_number(double v) {
  if (std::trunc(v) == v && std::fabs(v) < 9.0e15) return Json(static_cast<std::int64_t>(v));
  return Json(v);
}

Json emit_box(const BoundingBox& b) {
  return Json::array({emit_number(b.x0), emit_number(b.y0), emit_number(b.x1), emit_number(b.y1)});
}

int canvas_dim(const Json& canvas, const char* key) {
  const Json& v = require(canvas, key, "canvas");
  if (!v.is_number_integer()) throw SchemaError(std::string("canvas.") + key + " must be an integer");
  return v.get<int>();
}

}  // namespace

SceneLayout parse_scene_layout(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("layout document must be a JSON object");

  SceneLayout layout;
  const Json& canvas = require(doc, "canvas", "document");
  layout.canvas = {canvas_dim(canvas, "width"), canvas_dim(canvas, "height")};
  layout.global_caption = require_string(doc, "global_caption", "document");

  const Json& groups = require(doc, "groups", "document");
  if (!groups.is_array()) throw SchemaError("'groups' must be an array");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::string where = "groups[" + std::to_string(i) + "]";
    const Json& g = groups[i];
    GroupLayout out;
    out.id = require_string(g, "id", where);
    out.bbox = parse_box(require(g, "bbox", where), where);
    out.caption = require_string(g, "caption", where);
    const Json& members = require(g, "members", where);
    if (!members.is_array()) throw SchemaError(where + ": 'members' must be an array");
    for (const auto& m : members) {
      if (!m.is_string()) throw SchemaError(where + ": member ids must be strings");
      out.member_ids.push_back(m.get<std::string>());
    }
    layout.groups.push_back(std::move(out));
  }

  const Json& instances = require(doc, "instances", "document");
  if (!instances.is_array()) throw SchemaError("'instances' must be an array");
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::string where = "instances[" + std::to_string(i) + "]";
    const Json& e = instances[i];
    InstanceLayout out;
    out.id = require_string(e, "id", where);
    const std::string kind = require_string(e, "kind", where);
    if (kind == "human") {
      out.kind = InstanceKind::Human;
    } else if (kind == "object") {
      out.kind = InstanceKind::Object;
    } else {
      throw SchemaError(where + ": kind must be 'human' or 'object'");
    }
    out.bbox = parse_box(require(e, "bbox", where), where);
    out.caption = require_string(e, "caption", where);
    if (auto it = e.find("keypoints"); it != e.end() && !it->is_null())
      out.keypoints = parse_keypoints(*it, where);
    layout.instances.push_back(std::move(out));
  }

  validate(layout);
  return layout;
}

std::string serialize_scene_layout(const SceneLayout& layout) {
  Json doc;
  doc["canvas"] = {{"width", layout.canvas.width}, {"height", layout.canvas.height}};
  doc["global_caption"] = layout.global_caption;
  doc["groups"] = Json::array();
  for (const auto& g : layout.groups) {
    Json j;
    j["id"] = g.id;
    j["bbox"] = emit_box(g.bbox);
    j["caption"] = g.caption;
    j["members"] = g.member_ids;
    doc["groups"].push_back(std::move(j));
  }
  doc["instances"] = Json::array();
  for (const auto& inst : layout.instances) {
    Json j;
    j["id"] = inst.id;
    j["kind"] = std::string(to_string(inst.kind));
    j["bbox"] = emit_box(inst.bbox);
    j["caption"] = inst.caption;
    if (inst.keypoints) {
      Json kp = Json::array();
      for (const auto& jt : *inst.keypoints) kp.push_back(Json::array({emit_number(jt.x), emit_number(jt.y), jt.visible}));
      j["keypoints"] = std::move(kp);
    }
    doc["instances"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Alignment

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = ix * iy;
  if (inter <= 0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  if (a == b) return 1.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Pairing match_captions_to_poses(const std::vector<BoundingBox>& caption_boxes,
                                const std::vector<BoundingBox>& pose_boxes, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("pairing threshold must be in (0, 1]");
  struct Candidate {
    double score;
    std::size_t c, p;
  };
  std::vector<Candidate> candidates;
  for (std::size_t c = 0; c < caption_boxes.size(); ++c)
    for (std::size_t p = 0; p < pose_boxes.size(); ++p)
      if (double s = iou(caption_boxes[c], pose_boxes[p]); s >= threshold) candidates.push_back({s, c, p});
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  std::vector<bool> used_c(caption_boxes.size()), used_p(pose_boxes.size());
  Pairing out;
  for (const auto& cand : candidates) {
    if (used_c[cand.c] || used_p[cand.p]) continue;
    used_c[cand.c] = used_p[cand.p] = true;
    out.pairs.emplace_back(cand.c, cand.p);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (std::size_t c = 0; c < used_c.size(); ++c)
    if (!used_c[c]) out.unmatched_captions.push_back(c);
  for (std::size_t p = 0; p < used_p.size(); ++p)
    if (!used_p[p]) out.unmatched_poses.push_back(p);
  return out;
}

SceneLayout assign_instances_to_groups(const SceneLayout& layout) {
  SceneLayout out = layout;
  for (auto& g : out.groups) g.member_ids.clear();
  for (const auto& inst : out.instances) {
    const double cx = inst.bbox.center_x();
    const double cy = inst.bbox.center_y();
    std::optional<std::size_t> best;
    for (std::size_t g = 0; g < out.groups.size(); ++g) {
      const BoundingBox& b = out.groups[g].bbox;
      if (cx < b.x0 || cx >= b.x1 || cy < b.y0 || cy >= b.y1) continue;
      if (!best || b.area() < out.groups[*best].bbox.area()) best = g;
    }
    if (best) out.groups[*best].member_ids.push_back(inst.id);
  }
  return out;
}

}  // namespace dts::layout
