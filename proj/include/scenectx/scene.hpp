#pragma once

#include "scenectx/common.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace scenectx {

struct ScenePoint {
  Vec3 position = Vec3::Zero();
  Vec3 color = Vec3::Zero();  // RGB in [0,1]
  int camera = 0;
};

/// An aligned, colored point cloud: z is vertical and the ground is at z = 0.
struct Scene {
  std::string name;
  std::vector<ScenePoint> points;
  std::vector<Vec3> cameras;
};

/// Throws DataError when a camera index is out of range, a coordinate is
/// non-finite, or the bounding box has no volume.
void validate_scene(const Scene& scene);

/// Horizontal rectangle (possibly rotated about z) used for the
/// distance-to-boundary feature.
struct BoundingRect {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double angle = 0.0;  // rotation of the first axis about z, radians
  Eigen::Vector2d half_extent = Eigen::Vector2d::Zero();

  /// Horizontal distance from p to the nearest edge (negative outside).
  double distance_to_boundary(const Vec3& p) const;
  BoundingRect transformed(double yaw, const Eigen::Vector2d& shift) const;
};

/// Axis-aligned horizontal bounding rectangle of the scene's points.
BoundingRect scene_bounds(const Scene& scene);

/// One over-segmented surface patch.
struct Segment {
  int id = 0;                           // id from the segmentation
  std::vector<std::size_t> point_indices;
  std::vector<Vec3> positions;          // copies of the member positions
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();          // unit, faces the camera
  int camera = 0;                       // majority camera index
  Vec3 camera_position = Vec3::Zero();
  Vec3 camera_ray = Vec3::Zero();       // centroid - camera
  Vec3 horizontal_ray = Vec3::Zero();   // camera_ray with z zeroed
  Vec3 eigenvalues = Vec3::Zero();      // ascending: small, mid, large
  bool degenerate = false;
};

/// Centroid, covariance spectrum, camera-facing normal and rays of a point subset.
Segment segment_geometry(const Scene& scene, const std::vector<std::size_t>& point_indices, int id = 0);

struct GraphEdge {
  int i = 0;
  int j = 0;  // i < j
  double min_distance = 0.0;
};

/// Segments as vertices, proximity edges, raw and binned features. Edge
/// features are stored for both orientations: [0] = (i,j), [1] = (j,i).
struct SceneGraph {
  std::string scene_name;
  double context_range = 0.3;
  BoundingRect bounds;
  std::vector<Segment> vertices;
  std::vector<GraphEdge> edges;

  std::vector<Eigen::VectorXd> node_raw;
  std::vector<std::array<Eigen::VectorXd, 2>> edge_raw;
  std::vector<Eigen::VectorXd> node_features;
  std::vector<std::array<Eigen::VectorXd, 2>> edge_features;

  int size() const { return static_cast<int>(vertices.size()); }
  bool has_raw_features() const { return node_raw.size() == vertices.size() && edge_raw.size() == edges.size(); }
  bool has_binned_features() const {
    return node_features.size() == vertices.size() && edge_features.size() == edges.size();
  }
  /// Index into edges, or -1.
  int find_edge(int a, int b) const;
};

/// Groups of point indices per segment id (ids ascending; negative ids are noise and dropped).
struct SegmentList {
  std::vector<int> ids;
  std::vector<std::vector<std::size_t>> members;
};
SegmentList group_segments(const std::vector<int>& segment_of_point);

/// Vertices from the segment list, edges between segments whose closest
/// points are less than context_range apart.
SceneGraph build_graph(const Scene& scene, const SegmentList& segments, double context_range);

/// Class list plus the object each class is a part of.
class Taxonomy {
 public:
  Taxonomy() = default;
  Taxonomy(std::vector<std::string> classes, std::vector<std::string> objects);

  int size() const { return static_cast<int>(classes_.size()); }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::string>& objects() const { return objects_; }
  const std::string& class_name(int k) const { return classes_.at(static_cast<std::size_t>(k)); }
  const std::string& object_of(int k) const { return objects_.at(static_cast<std::size_t>(k)); }
  std::optional<int> find(const std::string& name) const;
  int index_of(const std::string& name) const;  // throws DataError
  bool same_object(int l, int k) const { return objects_[static_cast<std::size_t>(l)] == objects_[static_cast<std::size_t>(k)]; }
  std::uint64_t hash() const;

  bool operator==(const Taxonomy&) const = default;

 private:
  std::vector<std::string> classes_;
  std::vector<std::string> objects_;
};

enum class LabelMode { ExactlyOne, AtMostOne, Multilabel };

std::string to_string(LabelMode mode);
LabelMode label_mode_from_string(const std::string& text);

/// y_i^k for every vertex i and class k, values in {0, 0.5, 1}.
struct Labeling {
  Eigen::MatrixXd values;  // N x K
  LabelMode mode = LabelMode::ExactlyOne;

  Labeling() = default;
  Labeling(int nodes, int classes, LabelMode m = LabelMode::ExactlyOne)
      : values(Eigen::MatrixXd::Zero(nodes, classes)), mode(m) {}

  int nodes() const { return static_cast<int>(values.rows()); }
  int classes() const { return static_cast<int>(values.cols()); }
  bool is_integral() const;
  bool is_half_integral() const;
  /// Share of entries in {0, 1}.
  double integrality_fraction() const;
  /// Class index if exactly one entry equals 1, else -1.
  int label_of(int node) const;
  /// Checks the mode constraint (and half-integrality); throws DataError.
  void validate() const;

  static Labeling from_classes(const std::vector<int>& classes, int num_classes,
                               LabelMode mode = LabelMode::ExactlyOne);

  bool operator==(const Labeling& other) const { return mode == other.mode && values == other.values; }
};

}  // namespace scenectx
