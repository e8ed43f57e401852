#pragma once

#include "scenectx/io.hpp"
#include "scenectx/kdtree.hpp"
#include "scenectx/model.hpp"
#include "scenectx/scene.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <vector>

namespace scenectx {

/// Axis-aligned box of all points of the graph's vertices.
struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  Vec3 center() const { return 0.5 * (min + max); }
};
Box cloud_box(const SceneGraph& graph);

/// Cell centers of an m x m x m lattice over the box, m = ceil(cbrt(n)).
/// Index of cell (ix, iy, iz) is (ix * m + iy) * m + iz.
std::vector<Vec3> sample_grid(const Box& box, int n);

/// Raw node vector of a hallucinated one-point segment: only the height
/// and the boundary distance are filled.
Eigen::VectorXd location_node_raw(const Vec3& location, const BoundingRect& bounds);

/// Raw edge vectors [0] = (h, j) and [1] = (j, h) for a hallucinated point
/// h: horizontal distance, vertical displacement, distance to j's nearest
/// point and the depth difference seen from `camera`.
std::array<Eigen::VectorXd, 2> location_edge_raw(const Vec3& location, const Segment& neighbor, double min_distance,
                                                 const Vec3& camera);

/// Binned vectors with every bit of a non-location scalar cleared.
Eigen::VectorXd bin_location_node(const FeatureBinners& binners, const Eigen::VectorXd& raw);
Eigen::VectorXd bin_location_edge(const FeatureBinners& binners, const Eigen::VectorXd& raw);

struct SearchField {
  int class_index = 0;
  std::vector<Vec3> locations;
  std::vector<double> scores;
  std::vector<double> normalized;    // scores mapped to [0, 1]; all zero when constant
  std::vector<int> neighbor_counts;  // labeled segments within range of each sample
  int best = 0;                      // ties go to the lowest index
  bool no_context = false;           // no sample had a labeled neighbor
  bool degenerate = false;           // every score equal

  const Vec3& optimal_location() const { return locations[static_cast<std::size_t>(best)]; }
  double best_score() const { return scores[static_cast<std::size_t>(best)]; }
};

/// A labeled graph with one extra vertex h of class k connected to its
/// labeled neighbors. Unlabeled vertices keep zero rows.
struct AugmentedGraph {
  SceneGraph graph;
  Labeling labeling;  // multilabel mode
};

/// Scores hallucinated placements of a class against a labeled graph.
/// The graph needs vertex geometry; its own features are not used.
class ContextSearch {
 public:
  /// Without `camera` each edge uses the neighbor's own camera for depth.
  ContextSearch(const Weights& weights, const FeatureBinners& binners, const SceneGraph& graph,
                const SegmentLabels& labels, std::optional<Vec3> camera = std::nullopt);

  /// Labeled vertices (graph indices) whose nearest point is within range.
  std::vector<int> neighbors(const Vec3& location) const;
  /// Location-dependent part of the discriminant for class k at `location`.
  double score(int k, const Vec3& location, int* neighbor_count = nullptr) const;
  SearchField field(int k, int samples = 1000, int threads = 1) const;
  /// The same placement as a literal graph; discriminant(aug) = score + constant.
  AugmentedGraph augment(int k, const Vec3& location) const;
  /// Discriminant of the labeled base graph (needs binned features).
  double base_score() const;

 private:
  struct Edge {
    int neighbor;
    double distance;
    std::array<Eigen::VectorXd, 2> features;
  };
  std::vector<Edge> edges(const Vec3& location) const;

  const Weights& weights_;
  const FeatureBinners& binners_;
  const SceneGraph& graph_;
  std::optional<Vec3> camera_;
  std::vector<std::vector<int>> labels_;  // per vertex
  std::vector<int> labeled_;
  std::vector<KdTree> trees_;             // per labeled vertex
};

/// Distance from the box center to `truth`.
double midpoint_baseline_distance(const Box& box, const Vec3& truth);

}  // namespace scenectx
