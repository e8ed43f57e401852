#include "scenectx/scene.hpp"

#include "scenectx/kdtree.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>

namespace scenectx {

void validate_scene(const Scene& scene) {
  if (scene.points.empty()) throw DataError("scene has no points");
  for (std::size_t c = 0; c < scene.cameras.size(); ++c) {
    if (!scene.cameras[c].allFinite()) throw DataError("camera " + std::to_string(c) + " has a non-finite coordinate");
  }
  Vec3 lo = scene.points.front().position, hi = lo;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const auto& p = scene.points[i];
    if (!p.position.allFinite() || !p.color.allFinite()) {
      throw DataError("point " + std::to_string(i) + " has a non-finite value");
    }
    if (p.camera < 0 || static_cast<std::size_t>(p.camera) >= scene.cameras.size()) {
      throw DataError("point " + std::to_string(i) + ": camera index out of range (" + std::to_string(p.camera) +
                      " of " + std::to_string(scene.cameras.size()) + ")");
    }
    lo = lo.cwiseMin(p.position);
    hi = hi.cwiseMax(p.position);
  }
  const Vec3 extent = hi - lo;
  if (!(extent.x() > 0 && extent.y() > 0 && extent.z() > 0)) {
    throw DataError("scene bounding box has zero volume");
  }
}

double BoundingRect::distance_to_boundary(const Vec3& p) const {
  const Eigen::Vector2d d = p.head<2>() - center;
  const double c = std::cos(angle), s = std::sin(angle);
  const double u = c * d.x() + s * d.y();
  const double v = -s * d.x() + c * d.y();
  return std::min(half_extent.x() - std::abs(u), half_extent.y() - std::abs(v));
}

BoundingRect BoundingRect::transformed(double yaw, const Eigen::Vector2d& shift) const {
  BoundingRect out = *this;
  const double c = std::cos(yaw), s = std::sin(yaw);
  out.center = Eigen::Vector2d(c * center.x() - s * center.y(), s * center.x() + c * center.y()) + shift;
  out.angle = angle + yaw;
  return out;
}

BoundingRect scene_bounds(const Scene& scene) {
  BoundingRect rect;
  if (scene.points.empty()) return rect;
  Eigen::Vector2d lo = scene.points.front().position.head<2>(), hi = lo;
  for (const auto& p : scene.points) {
    lo = lo.cwiseMin(p.position.head<2>());
    hi = hi.cwiseMax(p.position.head<2>());
  }
  rect.center = 0.5 * (lo + hi);
  rect.half_extent = 0.5 * (hi - lo);
  return rect;
}

Segment segment_geometry(const Scene& scene, const std::vector<std::size_t>& point_indices, int id) {
  Segment seg;
  seg.id = id;
  seg.point_indices = point_indices;
  seg.positions.reserve(point_indices.size());
  std::map<int, std::size_t> votes;
  for (auto idx : point_indices) {
    if (idx >= scene.points.size()) throw DataError("segment " + std::to_string(id) + ": point index out of range");
    seg.positions.push_back(scene.points[idx].position);
    ++votes[scene.points[idx].camera];
  }
  if (seg.positions.empty()) throw DataError("segment " + std::to_string(id) + " is empty");

  // Majority camera; ties resolved toward the lowest index.
  std::size_t best_votes = 0;
  for (const auto& [cam, count] : votes) {
    if (count > best_votes) {
      best_votes = count;
      seg.camera = cam;
    }
  }
  if (seg.camera < 0 || static_cast<std::size_t>(seg.camera) >= scene.cameras.size()) {
    throw DataError("segment " + std::to_string(id) + ": camera index out of range");
  }
  seg.camera_position = scene.cameras[static_cast<std::size_t>(seg.camera)];

  const double n = static_cast<double>(seg.positions.size());
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : seg.positions) centroid += p;
  centroid /= n;
  seg.centroid = centroid;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : seg.positions) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  cov /= n;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  seg.eigenvalues = solver.eigenvalues().cwiseMax(0.0);  // ascending
  seg.camera_ray = centroid - seg.camera_position;
  seg.horizontal_ray = Vec3(seg.camera_ray.x(), seg.camera_ray.y(), 0.0);

  const double largest = seg.eigenvalues[2];
  seg.degenerate = seg.positions.size() < 3 || largest <= 1e-18 || seg.eigenvalues[1] <= 1e-9 * largest;

  Vec3 normal = solver.eigenvectors().col(0).normalized();
  if (seg.degenerate) {
    normal = -seg.camera_ray;
    normal = normal.norm() > 0 ? normal.normalized() : Vec3::UnitZ();
  }
  if (seg.camera_ray.dot(normal) > 0) normal = -normal;
  seg.normal = normal;
  return seg;
}

int SceneGraph::find_edge(int a, int b) const {
  if (a > b) std::swap(a, b);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].i == a && edges[e].j == b) return static_cast<int>(e);
  }
  return -1;
}

SegmentList group_segments(const std::vector<int>& segment_of_point) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t p = 0; p < segment_of_point.size(); ++p) {
    if (segment_of_point[p] >= 0) groups[segment_of_point[p]].push_back(p);
  }
  SegmentList out;
  for (auto& [id, members] : groups) {
    out.ids.push_back(id);
    out.members.push_back(std::move(members));
  }
  return out;
}

SceneGraph build_graph(const Scene& scene, const SegmentList& segments, double context_range) {
  if (!(context_range > 0)) throw UsageError("context_range must be positive");
  if (segments.ids.size() != segments.members.size()) throw DataError("segment list is inconsistent");

  SceneGraph graph;
  graph.scene_name = scene.name;
  graph.context_range = context_range;
  graph.bounds = scene_bounds(scene);

  std::vector<int> owner(scene.points.size(), -1);
  for (std::size_t s = 0; s < segments.members.size(); ++s) {
    if (segments.members[s].empty()) throw DataError("segment " + std::to_string(segments.ids[s]) + " is empty");
    for (auto p : segments.members[s]) {
      if (p >= scene.points.size()) throw DataError("segment point index out of range");
      if (owner[p] >= 0) throw DataError("segments overlap at point " + std::to_string(p));
      owner[p] = static_cast<int>(s);
    }
    graph.vertices.push_back(segment_geometry(scene, segments.members[s], segments.ids[s]));
  }

  const auto n = graph.vertices.size();
  std::vector<KdTree> trees;
  std::vector<std::pair<Vec3, Vec3>> boxes;
  trees.reserve(n);
  for (const auto& v : graph.vertices) {
    trees.emplace_back(v.positions);
    Vec3 lo = v.positions.front(), hi = lo;
    for (const auto& p : v.positions) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    boxes.emplace_back(lo, hi);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Box-to-box distance is a lower bound on the point distance.
      const Vec3 gap = (boxes[j].first - boxes[i].second).cwiseMax(boxes[i].first - boxes[j].second).cwiseMax(0.0);
      if (gap.norm() >= context_range) continue;
      const bool i_smaller = graph.vertices[i].positions.size() <= graph.vertices[j].positions.size();
      const double d = i_smaller ? min_distance(graph.vertices[i].positions, trees[j])
                                 : min_distance(graph.vertices[j].positions, trees[i]);
      if (d < context_range) graph.edges.push_back({static_cast<int>(i), static_cast<int>(j), d});
    }
  }
  return graph;
}

Taxonomy::Taxonomy(std::vector<std::string> classes, std::vector<std::string> objects)
    : classes_(std::move(classes)), objects_(std::move(objects)) {
  if (classes_.empty()) throw DataError("taxonomy needs at least one class");
  if (classes_.size() != objects_.size()) throw DataError("taxonomy: every class needs exactly one object");
  for (std::size_t a = 0; a < classes_.size(); ++a) {
    if (classes_[a].empty() || classes_[a] == "UNLABELED") throw DataError("taxonomy: invalid class name");
    for (std::size_t b = a + 1; b < classes_.size(); ++b) {
      if (classes_[a] == classes_[b]) throw DataError("taxonomy: duplicate class " + classes_[a]);
    }
  }
}

std::optional<int> Taxonomy::find(const std::string& name) const {
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    if (classes_[k] == name) return static_cast<int>(k);
  }
  return std::nullopt;
}

int Taxonomy::index_of(const std::string& name) const {
  if (auto k = find(name)) return *k;
  throw DataError("unknown class '" + name + "'");
}

std::uint64_t Taxonomy::hash() const {
  std::uint64_t h = fnv1a("taxonomy");
  for (std::size_t k = 0; k < classes_.size(); ++k) {
    h = fnv1a(classes_[k], h);
    h = fnv1a("\x1f", h);
    h = fnv1a(objects_[k], h);
    h = fnv1a("\x1e", h);
  }
  return h;
}

std::string to_string(LabelMode mode) {
  switch (mode) {
    case LabelMode::ExactlyOne: return "exactly-one";
    case LabelMode::AtMostOne: return "at-most-one";
    case LabelMode::Multilabel: return "multilabel";
  }
  return "exactly-one";
}

LabelMode label_mode_from_string(const std::string& text) {
  if (text == "exactly-one") return LabelMode::ExactlyOne;
  if (text == "at-most-one") return LabelMode::AtMostOne;
  if (text == "multilabel") return LabelMode::Multilabel;
  throw UsageError("unknown label mode '" + text + "'");
}

namespace {
bool is_value(double v, double target) { return v == target; }
}  // namespace

bool Labeling::is_integral() const {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    if (!is_value(v, 0.0) && !is_value(v, 1.0)) return false;
  }
  return true;
}

bool Labeling::is_half_integral() const {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    if (!is_value(v, 0.0) && !is_value(v, 0.5) && !is_value(v, 1.0)) return false;
  }
  return true;
}

double Labeling::integrality_fraction() const {
  if (values.size() == 0) return 1.0;
  Eigen::Index integral = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    if (v == 0.0 || v == 1.0) ++integral;
  }
  return static_cast<double>(integral) / static_cast<double>(values.size());
}

int Labeling::label_of(int node) const {
  int found = -1;
  for (int k = 0; k < classes(); ++k) {
    if (values(node, k) == 1.0) {
      if (found >= 0) return -1;
      found = k;
    }
  }
  return found;
}

void Labeling::validate() const {
  if (!is_half_integral()) throw DataError("labeling values must lie in {0, 0.5, 1}");
  for (int i = 0; i < nodes(); ++i) {
    const double sum = values.row(i).sum();
    if (mode == LabelMode::ExactlyOne && is_integral() && sum != 1.0) {
      throw DataError("exactly-one labeling: node " + std::to_string(i) + " has " + format_double(sum) + " labels");
    }
    if (mode == LabelMode::AtMostOne && sum > 1.0) {
      throw DataError("at-most-one labeling: node " + std::to_string(i) + " has more than one label");
    }
  }
}

Labeling Labeling::from_classes(const std::vector<int>& classes, int num_classes, LabelMode mode) {
  Labeling y(static_cast<int>(classes.size()), num_classes, mode);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] >= num_classes) throw DataError("class index out of range");
    if (classes[i] >= 0) y.values(static_cast<Eigen::Index>(i), classes[i]) = 1.0;
  }
  return y;
}

}  // namespace scenectx
