#include "scenectx/search.hpp"

#include "scenectx/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scenectx {

namespace {

std::vector<bool> edge_location_mask() {
  std::vector<bool> mask(edge_raw::kSize, false);
  for (const auto& spec : edge_type_specs()) {
    if (!spec.location_dependent) continue;
    for (int f = spec.raw_begin; f < spec.raw_begin + spec.raw_count; ++f) mask[static_cast<std::size_t>(f)] = true;
  }
  return mask;
}

Eigen::VectorXd bin_masked(const Binner& binner, const Eigen::VectorXd& raw, const std::vector<bool>& mask) {
  Eigen::VectorXd out = binner.apply(raw);
  for (int f = 0; f < binner.raw_dim(); ++f) {
    if (!mask[static_cast<std::size_t>(f)]) out.segment(binner.output_offset(f), binner.output_width(f)).setZero();
  }
  return out;
}

}  // namespace

Box cloud_box(const SceneGraph& graph) {
  Box box;
  box.min = Vec3::Constant(std::numeric_limits<double>::infinity());
  box.max = -box.min;
  for (const auto& v : graph.vertices) {
    for (const auto& p : v.positions) {
      box.min = box.min.cwiseMin(p);
      box.max = box.max.cwiseMax(p);
    }
  }
  if (!(box.max.array() > box.min.array()).all()) throw DataError("search: the labeled cloud's bounding box has no volume");
  return box;
}

std::vector<Vec3> sample_grid(const Box& box, int n) {
  if (n < 1) throw UsageError("search: the sample count must be positive");
  if (!(box.max.array() > box.min.array()).all()) throw DataError("search: degenerate bounding box");
  int m = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n))));
  while (m > 1 && (m - 1) * (m - 1) * (m - 1) >= n) --m;  // guard against cbrt rounding up
  while (m * m * m < n) ++m;
  const Vec3 step = (box.max - box.min) / m;
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(m) * m * m);
  for (int ix = 0; ix < m; ++ix) {
    for (int iy = 0; iy < m; ++iy) {
      for (int iz = 0; iz < m; ++iz) {
        out.push_back(box.min + Vec3(ix + 0.5, iy + 0.5, iz + 0.5).cwiseProduct(step));
      }
    }
  }
  return out;
}

Eigen::VectorXd location_node_raw(const Vec3& location, const BoundingRect& bounds) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(node_raw::kSize);
  f[node_raw::kHeight] = location.z();
  f[node_raw::kBoundaryDistance] = bounds.distance_to_boundary(location);
  return f;
}

std::array<Eigen::VectorXd, 2> location_edge_raw(const Vec3& location, const Segment& neighbor, double min_distance,
                                                 const Vec3& camera) {
  auto horizontal = [&](const Vec3& p) { return (p - camera).head<2>().norm(); };
  const double depth_h = horizontal(location), depth_j = horizontal(neighbor.centroid);
  std::array<Eigen::VectorXd, 2> out{Eigen::VectorXd::Zero(edge_raw::kSize), Eigen::VectorXd::Zero(edge_raw::kSize)};
  const double dxy = (location - neighbor.centroid).head<2>().norm();
  const double dz = location.z() - neighbor.centroid.z();
  out[0][edge_raw::kHorizontalDistance] = dxy;
  out[1][edge_raw::kHorizontalDistance] = dxy;
  out[0][edge_raw::kVerticalDisplacement] = dz;
  out[1][edge_raw::kVerticalDisplacement] = -dz;
  out[0][edge_raw::kMinDistance] = min_distance;
  out[1][edge_raw::kMinDistance] = min_distance;
  out[0][edge_raw::kDepthDifference] = depth_j - depth_h;
  out[1][edge_raw::kDepthDifference] = depth_h - depth_j;
  return out;
}

Eigen::VectorXd bin_location_node(const FeatureBinners& binners, const Eigen::VectorXd& raw) {
  return bin_masked(binners.node, raw, node_location_mask());
}

Eigen::VectorXd bin_location_edge(const FeatureBinners& binners, const Eigen::VectorXd& raw) {
  return bin_masked(binners.edge, raw, edge_location_mask());
}

ContextSearch::ContextSearch(const Weights& weights, const FeatureBinners& binners, const SceneGraph& graph,
                             const SegmentLabels& labels, std::optional<Vec3> camera)
    : weights_(weights), binners_(binners), graph_(graph), camera_(camera) {
  if (binners.node.raw_dim() != node_raw::kSize || binners.edge.raw_dim() != edge_raw::kSize) {
    throw DataError("search: the model has no trained binner");
  }
  if (binners.node.output_dim() != weights.structure.node_dim() || binners.edge.output_dim() != weights.structure.edge_dim()) {
    throw DataError("search: binner and model dimensions differ");
  }
  labels_.resize(graph.vertices.size());
  for (int i = 0; i < graph.size(); ++i) {
    const auto it = labels.find(graph.vertices[static_cast<std::size_t>(i)].id);
    if (it == labels.end() || it->second.empty()) continue;
    for (int k : it->second) {
      if (k < 0 || k >= weights.structure.classes()) throw DataError("search: label outside the model's classes");
    }
    labels_[static_cast<std::size_t>(i)] = it->second;
    labeled_.push_back(i);
    trees_.emplace_back(graph.vertices[static_cast<std::size_t>(i)].positions);
  }
  if (labeled_.empty()) throw DataError("search: the graph has no labeled segment");
}

std::vector<int> ContextSearch::neighbors(const Vec3& location) const {
  std::vector<int> out;
  for (std::size_t q = 0; q < labeled_.size(); ++q) {
    if (std::sqrt(trees_[q].nearest(location).second) < graph_.context_range) out.push_back(labeled_[q]);
  }
  return out;
}

std::vector<ContextSearch::Edge> ContextSearch::edges(const Vec3& location) const {
  std::vector<Edge> out;
  for (std::size_t q = 0; q < labeled_.size(); ++q) {
    const double d = std::sqrt(trees_[q].nearest(location).second);
    if (!(d < graph_.context_range)) continue;
    const Segment& seg = graph_.vertices[static_cast<std::size_t>(labeled_[q])];
    const auto raw = location_edge_raw(location, seg, d, camera_.value_or(seg.camera_position));
    out.push_back({labeled_[q], d, {bin_location_edge(binners_, raw[0]), bin_location_edge(binners_, raw[1])}});
  }
  return out;
}

double ContextSearch::score(int k, const Vec3& location, int* neighbor_count) const {
  const auto& s = weights_.structure;
  if (k < 0 || k >= s.classes()) throw UsageError("search: class index out of range");
  const Eigen::VectorXd node = bin_location_node(binners_, location_node_raw(location, graph_.bounds));
  double total = weights_.w.segment(static_cast<Eigen::Index>(s.node_offset(k)), s.node_dim()).dot(node);
  const auto found = edges(location);
  if (neighbor_count) *neighbor_count = static_cast<int>(found.size());
  for (const auto& e : found) {
    for (int l : labels_[static_cast<std::size_t>(e.neighbor)]) {
      for (std::size_t t = 0; t < s.edge_types().size(); ++t) {
        const auto& block = s.edge_types()[t];
        if (const auto off = s.edge_offset(static_cast<int>(t), k, l)) {
          total += weights_.w.segment(static_cast<Eigen::Index>(*off), block.dim).dot(e.features[0].segment(block.feature_offset, block.dim));
        }
        if (const auto off = s.edge_offset(static_cast<int>(t), l, k)) {
          total += weights_.w.segment(static_cast<Eigen::Index>(*off), block.dim).dot(e.features[1].segment(block.feature_offset, block.dim));
        }
      }
    }
  }
  return total;
}

SearchField ContextSearch::field(int k, int samples, int threads) const {
  SearchField f;
  f.class_index = k;
  f.locations = sample_grid(cloud_box(graph_), samples);
  const std::size_t n = f.locations.size();
  f.scores.assign(n, 0.0);
  f.neighbor_counts.assign(n, 0);
  parallel_for(n, threads, [&](std::size_t i) { f.scores[i] = score(k, f.locations[i], &f.neighbor_counts[i]); });
  f.best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (f.scores[i] > f.scores[static_cast<std::size_t>(f.best)]) f.best = static_cast<int>(i);
  }
  f.no_context = std::all_of(f.neighbor_counts.begin(), f.neighbor_counts.end(), [](int c) { return c == 0; });
  const auto [lo, hi] = std::minmax_element(f.scores.begin(), f.scores.end());
  f.degenerate = *lo == *hi;
  f.normalized.assign(n, 0.0);
  if (!f.degenerate) {
    for (std::size_t i = 0; i < n; ++i) f.normalized[i] = (f.scores[i] - *lo) / (*hi - *lo);
  }
  return f;
}

AugmentedGraph ContextSearch::augment(int k, const Vec3& location) const {
  if (!graph_.has_binned_features()) throw DataError("search: the base graph has no binned features");
  AugmentedGraph out;
  out.graph = graph_;
  SceneGraph& g = out.graph;
  const int h = g.size();
  Segment seg;
  seg.id = std::numeric_limits<int>::max();
  seg.positions = {location};
  seg.centroid = location;
  seg.degenerate = true;
  g.vertices.push_back(seg);
  g.node_raw.push_back(location_node_raw(location, g.bounds));
  g.node_features.push_back(bin_location_node(binners_, g.node_raw.back()));
  for (auto& e : edges(location)) {
    // Stored as (j, h) since j < h.
    g.edges.push_back({e.neighbor, h, e.distance});
    g.edge_raw.push_back({Eigen::VectorXd::Zero(edge_raw::kSize), Eigen::VectorXd::Zero(edge_raw::kSize)});
    g.edge_features.push_back({e.features[1], e.features[0]});
  }
  const int K = weights_.structure.classes();
  out.labeling = Labeling(h + 1, K, LabelMode::Multilabel);
  for (int i = 0; i < h; ++i) {
    for (int l : labels_[static_cast<std::size_t>(i)]) out.labeling.values(i, l) = 1.0;
  }
  out.labeling.values(h, k) = 1.0;
  return out;
}

double ContextSearch::base_score() const {
  const int K = weights_.structure.classes();
  Labeling y(graph_.size(), K, LabelMode::Multilabel);
  for (int i = 0; i < graph_.size(); ++i) {
    for (int l : labels_[static_cast<std::size_t>(i)]) y.values(i, l) = 1.0;
  }
  return discriminant(weights_, graph_, y);
}

double midpoint_baseline_distance(const Box& box, const Vec3& truth) { return (box.center() - truth).norm(); }

}  // namespace scenectx
