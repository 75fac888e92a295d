#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dts::layout {

/// Axis-aligned box in canvas pixels, origin top-left, y down.
struct BoundingBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Joint {
  double x = 0;
  double y = 0;
  int visible = 0;
  friend bool operator==(const Joint&, const Joint&) = default;
};

inline constexpr std::size_t kJointCount = 17;

/// COCO order: nose, left/right eye, left/right ear, shoulders, elbows,
/// wrists, hips, knees, ankles (left before right).
enum class JointId : std::uint8_t {
  Nose, LeftEye, RightEye, LeftEar, RightEar, LeftShoulder, RightShoulder, LeftElbow,
  RightElbow, LeftWrist, RightWrist, LeftHip, RightHip, LeftKnee, RightKnee, LeftAnkle, RightAnkle
};

using Keypoints = std::array<Joint, kJointCount>;

/// Limb connectivity used when rendering skeletons.
inline constexpr std::array<std::pair<int, int>, 19> kLimbs{{
    {15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12}, {5, 6}, {5, 7}, {6, 8},
    {7, 9}, {8, 10}, {1, 2}, {0, 1}, {0, 2}, {1, 3}, {2, 4}, {3, 5}, {4, 6},
}};

enum class InstanceKind { Human, Object };

struct InstanceLayout {
  std::string id;
  InstanceKind kind = InstanceKind::Object;
  BoundingBox bbox;
  std::string caption;
  std::optional<Keypoints> keypoints;
  friend bool operator==(const InstanceLayout&, const InstanceLayout&) = default;
};

struct GroupLayout {
  std::string id;
  BoundingBox bbox;
  std::string caption;
  std::vector<std::string> member_ids;
  friend bool operator==(const GroupLayout&, const GroupLayout&) = default;
};

struct Canvas {
  int width = 0;
  int height = 0;
  friend bool operator==(const Canvas&, const Canvas&) = default;
};

struct SceneLayout {
  Canvas canvas;
  std::string global_caption;
  std::vector<GroupLayout> groups;
  std::vector<InstanceLayout> instances;

  const InstanceLayout* find_instance(std::string_view id) const;
  /// Index of the group listing `instance_id`, or nullopt (the non-group bucket).
  std::optional<std::size_t> group_of(std::string_view instance_id) const;
  /// Instances that belong to no group.
  std::vector<const InstanceLayout*> ungrouped() const;

  friend bool operator==(const SceneLayout&, const SceneLayout&) = default;
};

// ---------------------------------------------------------------------------
// Interchange document

/// Parses and validates a layout interchange document (JSON text).
/// Throws SchemaError for structural problems, GeometryError for invalid boxes
/// or out-of-canvas joints.
SceneLayout parse_scene_layout(std::string_view json_text);

/// Canonical serialization; parse(serialize(x)) == x and serialize is
/// byte-stable for a given layout.
std::string serialize_scene_layout(const SceneLayout& layout);

/// Checks every invariant of a constructed layout.
void validate(const SceneLayout& layout);

// ---------------------------------------------------------------------------
// Dataset alignment

double iou(const BoundingBox& a, const BoundingBox& b);

struct Pairing {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (caption index, pose index)
  std::vector<std::size_t> unmatched_captions;
  std::vector<std::size_t> unmatched_poses;
};

inline constexpr double kDefaultPairingThreshold = 0.5;

/// Greedy one-to-one pairing in descending IoU order; ties resolve to the
/// lower (caption, pose) index pair.
Pairing match_captions_to_poses(const std::vector<BoundingBox>& caption_boxes,
                                const std::vector<BoundingBox>& pose_boxes,
                                double threshold = kDefaultPairingThreshold);

/// Reassigns every instance to the group whose box contains its box center
/// (half-open containment). Overlapping candidates resolve to the smallest
/// group by area, then the lowest index. Unplaced instances stay ungrouped.
SceneLayout assign_instances_to_groups(const SceneLayout& layout);

// ---------------------------------------------------------------------------
// Layout quality metrics

struct CategoryCounts {
  std::optional<int> groups;
  std::optional<int> humans;
  std::optional<int> objects;
};

struct CategoryScore {
  int expected = 0;
  int generated = 0;
  int matched = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct MatchReport {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::optional<CategoryScore> groups;
  std::optional<CategoryScore> humans;
  std::optional<CategoryScore> objects;
};

double f1_score(double precision, double recall);

/// Count-level precision/recall/F1 for the categories present in `expected`,
/// micro-averaged into the headline numbers.
MatchReport numerical_matching(const CategoryCounts& expected, const SceneLayout& layout);

enum class Side { Left, Right };

/// Fraction of groups whose box center lies strictly on `side` of the
/// vertical midline. A layout without groups scores 1.
double spatial_matching(const SceneLayout& layout, Side side);

/// Fraction of grouped humans whose visible joints all lie inside their
/// group box (closed box). No grouped humans scores 1.
double inclusion_check(const SceneLayout& layout);

// ---------------------------------------------------------------------------
// Procedural layouts

struct SynthesisSpec {
  int groups = 0;
  int humans = 0;
  int objects = 0;
  Canvas canvas{1024, 768};
  std::uint64_t seed = 0;
};

/// Deterministic stand-in for the grounding models: places the requested
/// groups, humans and objects with valid boxes and skeletons.
SceneLayout synthesize_layout_procedural(const SynthesisSpec& spec);

// ---------------------------------------------------------------------------
// Instruction prompts

struct PromptSet {
  std::string nat2hier;
  std::string global_grounding;
  std::string local_grounding;
};

struct GroupSummary {
  std::string caption;
  int humans = 0;
  int objects = 0;
  std::optional<BoundingBox> bbox;
  friend bool operator==(const GroupSummary&, const GroupSummary&) = default;
};

/// Structured content recoverable from any of the canonical prompt texts.
struct HierarchySummary {
  std::string global_caption;
  int groups = 0;
  int humans = 0;
  int objects = 0;
  int ungrouped_humans = 0;
  int ungrouped_objects = 0;
  std::vector<GroupSummary> group_details;
  friend bool operator==(const HierarchySummary&, const HierarchySummary&) = default;
};

HierarchySummary summarize(const SceneLayout& layout, bool with_boxes);

PromptSet build_instruction_prompts(const SceneLayout& layout);

/// Inverse of the prompt builders (and of grounding replies written in the
/// same canonical form). Throws SchemaError on malformed text.
HierarchySummary parse_grounding_reply(std::string_view text);

std::string_view to_string(InstanceKind kind);

}  // namespace dts::layout
