#include "scenectx/segmentation.hpp"

#include "scenectx/kdtree.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace scenectx {

void validate(const SegParams& params) {
  if (!(params.distance_factor > 0 && params.distance_factor < 1)) throw UsageError("distance factor must be in (0, 1)");
  if (!(params.angle_degrees > 0 && params.angle_degrees <= 90)) throw UsageError("angle threshold must be in (0, 90]");
  if (params.min_points < 1) throw UsageError("min points must be positive");
  if (params.normal_neighborhood < 3) throw UsageError("normal neighborhood must be at least 3");
}

std::vector<Vec3> estimate_local_normals(const Scene& scene, int k) {
  if (k < 3) throw UsageError("normal neighborhood must be at least 3");
  if (scene.points.size() < static_cast<std::size_t>(k)) throw DataError("fewer points than the normal neighborhood");
  std::vector<Vec3> positions;
  positions.reserve(scene.points.size());
  for (const auto& p : scene.points) positions.push_back(p.position);
  const KdTree tree(positions);
  std::vector<Vec3> normals(positions.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto nbrs = tree.knn(positions[i], static_cast<std::size_t>(k));
    Vec3 mean = Vec3::Zero();
    for (auto q : nbrs) mean += positions[q];
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (auto q : nbrs) {
      const Vec3 d = positions[q] - mean;
      cov += d * d.transpose();
    }
    solver.compute(cov);
    Vec3 n = solver.eigenvectors().col(0).normalized();
    const Vec3 to_camera = scene.cameras[static_cast<std::size_t>(scene.points[i].camera)] - positions[i];
    if (n.dot(to_camera) < 0) n = -n;
    normals[i] = n;
  }
  return normals;
}

SegmentationResult segment_cloud(const Scene& scene, const SegParams& params) {
  validate(params);
  if (scene.points.empty()) throw DataError("cannot segment an empty scene");
  const auto normals = estimate_local_normals(scene, params.normal_neighborhood);
  const std::size_t n = scene.points.size();
  std::vector<Vec3> positions(n);
  std::vector<double> depth(n);
  for (std::size_t i = 0; i < n; ++i) {
    positions[i] = scene.points[i].position;
    depth[i] = (positions[i] - scene.cameras[static_cast<std::size_t>(scene.points[i].camera)]).norm();
  }
  const KdTree tree(positions);
  const double f = params.distance_factor;
  const double cos_angle = std::cos(params.angle_degrees * M_PI / 180.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(params.seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> cluster(n, -1);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> frontier;
  for (auto seed : order) {
    if (cluster[seed] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    cluster[seed] = id;
    std::size_t size = 1;
    frontier.assign(1, seed);
    while (!frontier.empty()) {
      const auto p = frontier.back();
      frontier.pop_back();
      // |q - p| < f d_q and d_q <= d_p + |q - p| give |q - p| < f d_p / (1 - f).
      for (auto q : tree.radius_search(positions[p], f * depth[p] / (1.0 - f))) {
        if (cluster[q] >= 0) continue;
        if ((positions[q] - positions[p]).norm() >= f * depth[q]) continue;
        if (normals[q].dot(normals[p]) <= cos_angle) continue;
        cluster[q] = id;
        ++size;
        frontier.push_back(q);
      }
    }
    sizes.push_back(size);
  }

  SegmentationResult out;
  out.clusters = static_cast<int>(sizes.size());
  std::vector<int> renumber(sizes.size(), -1);
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] >= static_cast<std::size_t>(params.min_points)) renumber[c] = out.segments++;
  }
  out.segment_of_point.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.segment_of_point[i] = renumber[static_cast<std::size_t>(cluster[i])];
  return out;
}

}  // namespace scenectx
