#pragma once

#include "scenectx/scene.hpp"

#include <cstdint>
#include <vector>

namespace scenectx {

struct SegParams {
  double distance_factor = 0.1;  // join threshold = factor * candidate's distance from its camera
  double angle_degrees = 30.0;
  int min_points = 50;
  int normal_neighborhood = 10;
  std::uint64_t seed = 0;
};

/// Throws UsageError unless every parameter is in range.
void validate(const SegParams& params);

/// Per-point unit normal: smallest-eigenvalue eigenvector of the k-NN
/// covariance (k includes the point), oriented toward the point's camera.
std::vector<Vec3> estimate_local_normals(const Scene& scene, int k);

struct SegmentationResult {
  std::vector<int> segment_of_point;  // consecutive ids from 0; -1 marks noise
  int segments = 0;
  int clusters = 0;  // grown regions before small ones were marked as noise
};

/// Region growing from seeds in a seeded random order. A candidate joins
/// the region when it is closer than distance_factor * (its camera distance)
/// to the region point that reached it and their normals differ by less
/// than angle_degrees.
SegmentationResult segment_cloud(const Scene& scene, const SegParams& params);

}  // namespace scenectx
