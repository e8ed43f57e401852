#pragma once

#include "scenectx/common.hpp"

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace scenectx {

/// Static 3D kd-tree over a point set. Indices returned refer to the
/// order of the points passed to the constructor.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Closest point; returns (index, squared distance). Empty tree → (npos, inf).
  std::pair<std::size_t, double> nearest(const Vec3& query) const;

  /// All points with squared distance < radius².
  std::vector<std::size_t> radius_search(const Vec3& query, double radius) const;

  /// k nearest points sorted by distance (ties by index).
  std::vector<std::size_t> knn(const Vec3& query, std::size_t k) const;

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

 private:
  struct Node {
    std::size_t begin = 0, end = 0;  // range in order_
    int axis = -1;                   // -1 for leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Minimum distance between two point sets using a tree over `b`.
double min_distance(const std::vector<Vec3>& a, const KdTree& b);

}  // namespace scenectx
