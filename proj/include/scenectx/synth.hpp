#pragma once

#include "scenectx/io.hpp"
#include "scenectx/scene.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scenectx {

/// Color as an HSV mean with uniform per-part jitter and per-point noise.
struct ColorSpec {
  Vec3 hsv = Vec3(0, 0, 0.5);  // hue degrees, saturation, value
  Vec3 jitter = Vec3::Zero();
};

using Range = std::pair<double, double>;

/// One planar part of the scene. Rules:
///   floor_plane  the whole room floor
///   wall_plane   the back wall (y = depth)
///   free         horizontal top at `elevation`, against a random room side
///   leg_of       vertical panel under an end of `parent` (side -1 or +1)
///   backrest     vertical panel standing on the back edge of `parent`
///   on_top_of    horizontal patch at a random spot on `parent`
///   in_front_of  horizontal patch on `parent`, `distance` in front of `anchor`
struct PartBlueprint {
  std::string name;
  std::string class_name;
  std::string rule;
  std::string parent;
  std::string anchor;
  int side = 1;
  Range length{0.5, 0.5};     // along the parent's long axis
  Range width{0.5, 0.5};      // horizontal depth, or height for vertical panels
  Range elevation{0.7, 0.7};  // free: top height
  Range offset{0.0, 0.0};     // vertical gap above the parent
  Range distance{0.2, 0.2};   // in_front_of: horizontal offset from the anchor
  Range margin{0.05, 0.15};   // free: gap to the room side
  double probability = 1.0;
  ColorSpec color;
};

struct SceneTemplate {
  std::string name = "scene";
  double room_width = 3.0;   // x
  double room_depth = 3.0;   // y
  double room_height = 2.2;  // wall height
  double point_spacing = 0.03;
  double position_sigma = 0.003;
  double color_sigma = 0.02;
  int camera_count = 4;
  double camera_height = 1.5;
  double camera_radius = 0.9;
  Taxonomy taxonomy;
  std::vector<PartBlueprint> parts;

  /// Throws DataError on unknown rules, missing parents or classes, or a
  /// parent listed after its child.
  void validate() const;
};

SceneTemplate template_from_json(const nlohmann::json& j);
nlohmann::json template_to_json(const SceneTemplate& t);
SceneTemplate load_template(const std::string& path);
/// The built-in office template (tables and chairs that look alike).
SceneTemplate office_template();

/// A scene with its ground-truth segmentation and labels.
struct SceneBundle {
  Scene scene;
  std::vector<int> segmentation;  // per point
  SegmentLabels labels;           // per segment id
  Taxonomy taxonomy;
};

SceneBundle generate(const SceneTemplate& t, std::uint64_t seed);

/// Default suite: `count` scenes with seeds base_seed, base_seed + 1, ...
std::vector<SceneBundle> generate_suite(const SceneTemplate& t, int count, std::uint64_t base_seed);

struct AblationResult {
  SceneBundle bundle;
  std::string class_name;
  Vec3 hidden_centroid = Vec3::Zero();  // mean of the removed points
  std::size_t removed_points = 0;
};

/// Removes every point of segments labeled `class_name`; throws DataError
/// when the class is absent.
AblationResult ablate(const SceneBundle& bundle, const std::string& class_name);

void save_bundle(const SceneBundle& bundle, const std::string& directory);
SceneBundle load_bundle(const std::string& directory);

}  // namespace scenectx
