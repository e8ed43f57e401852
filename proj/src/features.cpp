#include "scenectx/features.hpp"

#include "scenectx/kdtree.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace scenectx {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

double hue_difference(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

}  // namespace

const std::vector<EdgeTypeSpec>& edge_type_specs() {
  static const std::vector<EdgeTypeSpec> specs = {
      {"E1_color", edge_raw::kColorDifference, 3, true, false},
      {"E2_shape", edge_raw::kCoplanarity, 2, true, false},
      {"E3_horizontal", edge_raw::kHorizontalDistance, 1, false, true},
      {"E4_vertical", edge_raw::kVerticalDisplacement, 1, false, true},
      {"E5_normal_dot", edge_raw::kNormalDot, 1, false, false},
      {"E6_angle", edge_raw::kAngleDifference, 1, false, false},
      {"E8_min_distance", edge_raw::kMinDistance, 1, false, true},
      {"E9_depth", edge_raw::kDepthDifference, 1, false, true},
  };
  return specs;
}

std::vector<bool> node_binary_mask() { return std::vector<bool>(node_raw::kSize, false); }

std::vector<bool> edge_binary_mask() {
  std::vector<bool> mask(edge_raw::kSize, false);
  mask[edge_raw::kConvexity] = true;
  return mask;
}

std::vector<bool> node_location_mask() {
  std::vector<bool> mask(node_raw::kSize, false);
  mask[node_raw::kHeight] = true;
  mask[node_raw::kBoundaryDistance] = true;
  return mask;
}

Vec3 rgb_to_hsv(const Vec3& rgb) {
  const double r = rgb.x(), g = rgb.y(), b = rgb.z();
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0) {
    if (mx == r) {
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = 60.0 * ((b - r) / delta + 2.0);
    } else {
      h = 60.0 * ((r - g) / delta + 4.0);
    }
  }
  if (h < 0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  const double s = mx > 0 ? delta / mx : 0.0;
  return {h, s, mx};
}

Eigen::VectorXd hog_descriptor(const Scene& scene, const Segment& segment, const FeatureConfig& config) {
  constexpr int kCell = 8;
  constexpr int kOrientations = 18;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(node_raw::kHogDim);
  if (segment.positions.size() < 2) return out;

  const Vec3 cam = segment.camera_position;
  Vec3 forward = segment.centroid - cam;
  if (forward.norm() <= 0) return out;
  forward.normalize();
  Vec3 right = forward.cross(Vec3::UnitZ());
  if (right.norm() < 1e-9) right = Vec3::UnitX();
  right.normalize();
  const Vec3 up = right.cross(forward);
  const double width = config.image_width, height = config.image_height;
  const double focal = 0.5 * width / std::tan(0.5 * config.horizontal_fov_degrees * kDegToRad);

  // Point spacing → splat radius in pixels.
  KdTree tree(segment.positions);
  double spacing = 0.0;
  const std::size_t stride = std::max<std::size_t>(1, segment.positions.size() / 64);
  int samples = 0;
  for (std::size_t i = 0; i < segment.positions.size(); i += stride) {
    auto nn = tree.knn(segment.positions[i], 2);
    if (nn.size() == 2) {
      spacing += (segment.positions[nn[1]] - segment.positions[i]).norm();
      ++samples;
    }
  }
  spacing = samples > 0 ? spacing / samples : 0.0;

  struct Projected {
    double u, v, depth, intensity;
  };
  std::vector<Projected> projected;
  projected.reserve(segment.positions.size());
  double umin = width, umax = 0, vmin = height, vmax = 0;
  for (std::size_t k = 0; k < segment.positions.size(); ++k) {
    const Vec3 d = segment.positions[k] - cam;
    const double zc = d.dot(forward);
    if (zc <= 1e-6) continue;
    const double u = 0.5 * width + focal * d.dot(right) / zc;
    const double v = 0.5 * height - focal * d.dot(up) / zc;
    if (u < 0 || u >= width || v < 0 || v >= height) continue;
    const double intensity = rgb_to_hsv(scene.points[segment.point_indices[k]].color).z();
    projected.push_back({u, v, zc, intensity});
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  if (projected.empty()) return out;

  const int x0 = std::max(0, static_cast<int>(umin) - kCell);
  const int y0 = std::max(0, static_cast<int>(vmin) - kCell);
  const int x1 = std::min(config.image_width, static_cast<int>(umax) + kCell + 1);
  const int y1 = std::min(config.image_height, static_cast<int>(vmax) + kCell + 1);
  const int w = x1 - x0, h = y1 - y0;
  std::vector<double> sum(static_cast<std::size_t>(w * h), 0.0);
  std::vector<int> count(static_cast<std::size_t>(w * h), 0);
  for (const auto& p : projected) {
    const int radius = std::clamp(static_cast<int>(std::lround(0.6 * focal * spacing / p.depth)), 0, 8);
    const int cu = static_cast<int>(p.u) - x0, cv = static_cast<int>(p.v) - y0;
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        const int x = cu + dx, y = cv + dy;
        if (x < 0 || y < 0 || x >= w || y >= h) continue;
        sum[static_cast<std::size_t>(y * w + x)] += p.intensity;
        ++count[static_cast<std::size_t>(y * w + x)];
      }
    }
  }
  auto filled = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && count[static_cast<std::size_t>(y * w + x)] > 0; };
  auto value = [&](int x, int y) {
    const auto idx = static_cast<std::size_t>(y * w + x);
    return sum[idx] / count[idx];
  };

  const int cells_x = (w + kCell - 1) / kCell, cells_y = (h + kCell - 1) / kCell;
  std::vector<std::array<double, kOrientations>> hist(static_cast<std::size_t>(cells_x * cells_y));
  std::vector<bool> occupied(hist.size(), false);
  for (auto& cell : hist) cell.fill(0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!filled(x, y)) continue;
      const auto cell = static_cast<std::size_t>((y / kCell) * cells_x + x / kCell);
      occupied[cell] = true;
      if (!filled(x - 1, y) || !filled(x + 1, y) || !filled(x, y - 1) || !filled(x, y + 1)) continue;
      const double gx = value(x + 1, y) - value(x - 1, y);
      const double gy = value(x, y + 1) - value(x, y - 1);
      const double magnitude = std::hypot(gx, gy);
      if (magnitude <= 0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0) angle += 2 * std::numbers::pi;
      const int bin = std::min(kOrientations - 1, static_cast<int>(angle / (2 * std::numbers::pi) * kOrientations));
      hist[cell][static_cast<std::size_t>(bin)] += magnitude;
    }
  }

  auto energy = [&](int cx, int cy) {
    if (cx < 0 || cy < 0 || cx >= cells_x || cy >= cells_y) return 0.0;
    const auto& c = hist[static_cast<std::size_t>(cy * cells_x + cx)];
    double e = 0;
    for (int b = 0; b < kOrientations / 2; ++b) {
      const double s = c[static_cast<std::size_t>(b)] + c[static_cast<std::size_t>(b + kOrientations / 2)];
      e += s * s;
    }
    return e;
  };

  int used = 0;
  for (int cy = 0; cy < cells_y; ++cy) {
    for (int cx = 0; cx < cells_x; ++cx) {
      const auto idx = static_cast<std::size_t>(cy * cells_x + cx);
      if (!occupied[idx]) continue;
      ++used;
      const auto& c = hist[idx];
      int delta = 0;
      for (int sy : {-1, 1}) {
        for (int sx : {-1, 1}) {
          const double norm = std::sqrt(energy(cx, cy) + energy(cx + sx, cy) + energy(cx, cy + sy) +
                                        energy(cx + sx, cy + sy) + 1e-12);
          for (int b = 0; b < kOrientations; ++b) {
            const double v = std::min(c[static_cast<std::size_t>(b)] / norm, 0.2);
            out[b] += 0.5 * v;
            out[27 + delta] += 0.2357 * v;
          }
          for (int b = 0; b < kOrientations / 2; ++b) {
            const double v = std::min(
                (c[static_cast<std::size_t>(b)] + c[static_cast<std::size_t>(b + kOrientations / 2)]) / norm, 0.2);
            out[18 + b] += 0.5 * v;
          }
          ++delta;
        }
      }
    }
  }
  if (used > 0) out /= used;
  return out;
}

Eigen::VectorXd node_features_raw(const Scene& scene, const Segment& segment, const BoundingRect& bounds,
                                  const FeatureConfig& config) {
  using namespace node_raw;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kSize);

  // N1, N2: color histogram and mean HSV.
  double sin_sum = 0, cos_sum = 0, sat_sum = 0, val_sum = 0;
  for (auto idx : segment.point_indices) {
    const Vec3 hsv = rgb_to_hsv(scene.points[idx].color);
    const int hb = std::min(kHueBins - 1, static_cast<int>(hsv.x() / 360.0 * kHueBins));
    const int sb = std::min(kSaturationBins - 1, static_cast<int>(hsv.y() * kSaturationBins));
    const int vb = std::min(kValueBins - 1, static_cast<int>(hsv.z() * kValueBins));
    f[kHsvHistogram + hb] += 1;
    f[kHsvHistogram + kHueBins + sb] += 1;
    f[kHsvHistogram + kHueBins + kSaturationBins + vb] += 1;
    sin_sum += std::sin(hsv.x() * kDegToRad);
    cos_sum += std::cos(hsv.x() * kDegToRad);
    sat_sum += hsv.y();
    val_sum += hsv.z();
  }
  const double n = static_cast<double>(segment.point_indices.size());
  if (n > 0) {
    f.segment(kHsvHistogram, 14) /= n;
    double hue = 0;
    if (std::hypot(sin_sum, cos_sum) > 1e-9 * n) {
      hue = std::atan2(sin_sum, cos_sum) / kDegToRad;
      if (hue < 0) hue += 360.0;
      if (hue >= 360.0) hue -= 360.0;
    }
    f[kMeanHsv] = hue;
    f[kMeanHsv + 1] = sat_sum / n;
    f[kMeanHsv + 2] = val_sum / n;
  }

  // N3
  f.segment(kHog, kHogDim) = hog_descriptor(scene, segment, config);

  // N4..N6: spectral shape and normal, zero for degenerate segments.
  if (!segment.degenerate) {
    const Vec3& ev = segment.eigenvalues;
    f[kLinearness] = ev[2] - ev[1];
    f[kPlanarness] = ev[1] - ev[0];
    f[kScatter] = ev[0];
    f[kVerticalNormal] = std::abs(segment.normal.z());
  }

  // N7
  f[kHeight] = segment.centroid.z();

  // N8: vertical extent and diagonal of the principal horizontal rectangle.
  double zmin = segment.positions.front().z(), zmax = zmin;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : segment.positions) {
    zmin = std::min(zmin, p.z());
    zmax = std::max(zmax, p.z());
    mean += p.head<2>();
  }
  mean /= static_cast<double>(segment.positions.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : segment.positions) {
    const Eigen::Vector2d d = p.head<2>() - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(cov);
  const Eigen::Matrix2d axes = solver.eigenvectors();
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  for (const auto& p : segment.positions) {
    const Eigen::Vector2d local = axes.transpose() * (p.head<2>() - mean);
    lo = lo.cwiseMin(local);
    hi = hi.cwiseMax(local);
  }
  f[kVerticalExtent] = zmax - zmin;
  f[kHorizontalExtent] = (hi - lo).norm();

  // N9
  f[kBoundaryDistance] = bounds.distance_to_boundary(segment.centroid);
  return f;
}

double coplanarity(const Segment& a, const Segment& b, double alpha_degrees, double min_distance) {
  if (a.degenerate || b.degenerate) return -1.0;
  if (std::abs(a.normal.dot(b.normal)) <= std::cos(alpha_degrees * kDegToRad)) return -1.0;
  const double d = std::abs((a.centroid - b.centroid).dot(a.normal));
  return 1.0 / std::max(d, min_distance);
}

double convexity(const Segment& a, const Segment& b, double min_distance_ab, double tau, double alpha_degrees) {
  if (a.degenerate || b.degenerate) return 0.0;
  if (!(min_distance_ab < tau)) return 0.0;
  const Vec3 d_ab = b.centroid - a.centroid;
  const bool outward = a.normal.dot(d_ab) <= 0 && b.normal.dot(-d_ab) <= 0;
  const bool angled = a.normal.dot(b.normal) <= std::cos(alpha_degrees * kDegToRad);
  return outward || angled ? 1.0 : 0.0;
}

Eigen::VectorXd edge_features_raw(const Segment& a, const Segment& b, const Vec3& mean_hsv_a, const Vec3& mean_hsv_b,
                                  double min_distance_ab, const FeatureConfig& config) {
  using namespace edge_raw;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kSize);
  f[kColorDifference] = hue_difference(mean_hsv_a.x(), mean_hsv_b.x());
  f[kColorDifference + 1] = std::abs(mean_hsv_a.y() - mean_hsv_b.y());
  f[kColorDifference + 2] = std::abs(mean_hsv_a.z() - mean_hsv_b.z());
  f[kCoplanarity] = coplanarity(a, b, config.alpha_degrees, config.coplanarity_min_distance);
  f[kConvexity] = convexity(a, b, min_distance_ab, config.tau, config.alpha_degrees);
  f[kHorizontalDistance] = (a.centroid - b.centroid).head<2>().norm();
  f[kVerticalDisplacement] = a.centroid.z() - b.centroid.z();
  if (!a.degenerate && !b.degenerate) {
    f[kNormalDot] = a.normal.dot(b.normal);
    f[kAngleDifference] = std::acos(clamp_unit(a.normal.z())) - std::acos(clamp_unit(b.normal.z()));
  }
  f[kMinDistance] = min_distance_ab;
  f[kDepthDifference] = b.horizontal_ray.norm() - a.horizontal_ray.norm();
  return f;
}

Eigen::VectorXd edge_features_raw(const SceneGraph& graph, int i, int j, const FeatureConfig& config) {
  const int e = graph.find_edge(i, j);
  if (e < 0 || i == j) throw DataError("no edge between segments " + std::to_string(i) + " and " + std::to_string(j));
  if (graph.node_raw.size() != graph.vertices.size()) throw DataError("node features must be computed first");
  const auto& a = graph.vertices[static_cast<std::size_t>(i)];
  const auto& b = graph.vertices[static_cast<std::size_t>(j)];
  const Vec3 hsv_a = graph.node_raw[static_cast<std::size_t>(i)].segment<3>(node_raw::kMeanHsv);
  const Vec3 hsv_b = graph.node_raw[static_cast<std::size_t>(j)].segment<3>(node_raw::kMeanHsv);
  return edge_features_raw(a, b, hsv_a, hsv_b, graph.edges[static_cast<std::size_t>(e)].min_distance, config);
}

void compute_raw_features(const Scene& scene, SceneGraph& graph, const FeatureConfig& config) {
  graph.node_raw.clear();
  graph.edge_raw.clear();
  for (const auto& v : graph.vertices) graph.node_raw.push_back(node_features_raw(scene, v, graph.bounds, config));
  for (const auto& e : graph.edges) {
    const auto i = static_cast<std::size_t>(e.i), j = static_cast<std::size_t>(e.j);
    const Vec3 hsv_i = graph.node_raw[i].segment<3>(node_raw::kMeanHsv);
    const Vec3 hsv_j = graph.node_raw[j].segment<3>(node_raw::kMeanHsv);
    graph.edge_raw.push_back(
        {edge_features_raw(graph.vertices[i], graph.vertices[j], hsv_i, hsv_j, e.min_distance, config),
         edge_features_raw(graph.vertices[j], graph.vertices[i], hsv_j, hsv_i, e.min_distance, config)});
  }
  graph.node_features.clear();
  graph.edge_features.clear();
}

}  // namespace scenectx
