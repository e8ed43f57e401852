#pragma once

#include "scenectx/scene.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace scenectx {

/// Raw node feature layout (56 scalars).
namespace node_raw {
inline constexpr int kHsvHistogram = 0;  // 6 hue + 4 saturation + 4 value bins
inline constexpr int kHueBins = 6;
inline constexpr int kSaturationBins = 4;
inline constexpr int kValueBins = 4;
inline constexpr int kMeanHsv = 14;      // hue (degrees), saturation, value
inline constexpr int kHog = 17;          // 31 HOG dimensions
inline constexpr int kHogDim = 31;
inline constexpr int kLinearness = 48;
inline constexpr int kPlanarness = 49;
inline constexpr int kScatter = 50;
inline constexpr int kVerticalNormal = 51;
inline constexpr int kHeight = 52;
inline constexpr int kVerticalExtent = 53;
inline constexpr int kHorizontalExtent = 54;
inline constexpr int kBoundaryDistance = 55;
inline constexpr int kSize = 56;
}  // namespace node_raw

/// Raw edge feature layout (11 scalars, one orientation).
namespace edge_raw {
inline constexpr int kColorDifference = 0;  // |dH|, |dS|, |dV|
inline constexpr int kCoplanarity = 3;
inline constexpr int kConvexity = 4;
inline constexpr int kHorizontalDistance = 5;
inline constexpr int kVerticalDisplacement = 6;
inline constexpr int kNormalDot = 7;
inline constexpr int kAngleDifference = 8;
inline constexpr int kMinDistance = 9;
inline constexpr int kDepthDifference = 10;
inline constexpr int kSize = 11;
}  // namespace edge_raw

/// One edge feature type: a contiguous slice of the raw edge vector with
/// its own class-pair graph in the model.
struct EdgeTypeSpec {
  std::string name;
  int raw_begin = 0;
  int raw_count = 0;
  bool object_associative = false;  // parsimonious model: visual similarity / shape
  bool location_dependent = false;  // usable by contextual search
};

/// E1, E2 (object-associative) and E3..E6, E8, E9 (non-associative). There is no E7.
const std::vector<EdgeTypeSpec>& edge_type_specs();

/// Raw scalars that are already binary and pass through binning untouched.
std::vector<bool> node_binary_mask();
std::vector<bool> edge_binary_mask();

/// Raw node scalars that depend only on a segment's location.
std::vector<bool> node_location_mask();

struct FeatureConfig {
  int bins = 10;
  double alpha_degrees = 30.0;          // angle tolerance for coplanarity / convexity
  double tau = 0.05;                    // convexity min-distance tolerance, meters
  double coplanarity_min_distance = 0.01;
  int image_width = 640;
  int image_height = 480;
  double horizontal_fov_degrees = 57.0;
};

Vec3 rgb_to_hsv(const Vec3& rgb);  // hue degrees [0,360), s, v in [0,1]

/// 31-dimensional HOG averaged over the cells covered by the segment when
/// its points are projected into the segment's camera.
Eigen::VectorXd hog_descriptor(const Scene& scene, const Segment& segment, const FeatureConfig& config = {});

/// N1..N9 for one segment.
Eigen::VectorXd node_features_raw(const Scene& scene, const Segment& segment, const BoundingRect& bounds,
                                  const FeatureConfig& config = {});

/// -1 when the normals are not within alpha of parallel, else 1/d with
/// d the centroid offset along segment a's normal, clamped below.
double coplanarity(const Segment& a, const Segment& b, double alpha_degrees = 30.0, double min_distance = 0.01);

/// 1 when the adjoined segments form a convex surface (or meet at an angle).
double convexity(const Segment& a, const Segment& b, double min_distance_ab, double tau = 0.05,
                 double alpha_degrees = 30.0);

/// Raw features for orientation (a, b) of an existing edge. `mean_hsv_*`
/// are the N2 values of the two segments.
Eigen::VectorXd edge_features_raw(const Segment& a, const Segment& b, const Vec3& mean_hsv_a, const Vec3& mean_hsv_b,
                                  double min_distance_ab, const FeatureConfig& config = {});

/// Edge (i, j) must be present in the graph; throws DataError otherwise.
Eigen::VectorXd edge_features_raw(const SceneGraph& graph, int i, int j, const FeatureConfig& config = {});

/// Fills node_raw and edge_raw (both orientations).
void compute_raw_features(const Scene& scene, SceneGraph& graph, const FeatureConfig& config = {});

}  // namespace scenectx
