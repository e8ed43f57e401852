#pragma once

#include "scenectx/model.hpp"
#include "scenectx/scene.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace scenectx::testing {

/// Classes c0..c{K-1}; consecutive pairs share an object.
inline Taxonomy make_taxonomy(int K) {
  std::vector<std::string> classes, objects;
  for (int k = 0; k < K; ++k) {
    classes.push_back("c" + std::to_string(k));
    objects.push_back("o" + std::to_string(k / 2));
  }
  return Taxonomy(classes, objects);
}

inline std::vector<int> small_edge_dims() { return {3, 2, 2, 2, 2, 2, 2, 2}; }

/// Graph with random 0/1 features; vertices carry no geometry.
inline SceneGraph random_graph(std::mt19937_64& rng, int N, double edge_probability, int node_dim,
                               const std::vector<int>& edge_dims) {
  SceneGraph g;
  g.scene_name = "random";
  int edge_dim = 0;
  for (int d : edge_dims) edge_dim += d;
  std::bernoulli_distribution bit(0.5), link(edge_probability);
  auto random_bits = [&](int d) {
    Eigen::VectorXd v(d);
    for (int q = 0; q < d; ++q) v[q] = bit(rng) ? 1.0 : 0.0;
    return v;
  };
  for (int i = 0; i < N; ++i) {
    Segment s;
    s.id = i;
    g.vertices.push_back(s);
    g.node_features.push_back(random_bits(node_dim));
  }
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      if (!link(rng)) continue;
      g.edges.push_back({i, j, 0.0});
      g.edge_features.push_back({random_bits(edge_dim), random_bits(edge_dim)});
    }
  }
  return g;
}

inline Weights random_weights(const ModelStructure& s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Weights w(s);
  for (Eigen::Index q = 0; q < w.w.size(); ++q) w.w[q] = gauss(rng);
  return w;
}

/// Integral objective evaluated directly from the potentials.
inline double direct_score(const Potentials& p, const Eigen::MatrixXd& y) {
  double total = p.constant;
  for (int i = 0; i < p.nodes(); ++i) {
    for (int k = 0; k < p.classes(); ++k) total += y(i, k) * p.node(i, k);
  }
  for (std::size_t e = 0; e < p.edges.size(); ++e) {
    for (int l = 0; l < p.classes(); ++l) {
      for (int k = 0; k < p.classes(); ++k) total += p.pair[e](l, k) * y(p.edges[e].first, l) * y(p.edges[e].second, k);
    }
  }
  return total;
}

/// Visits every labeling of N nodes allowed by the mode, node 0 most significant,
/// options ordered unlabeled (at-most-one only) then class 0..K-1.
template <typename F>
void for_each_labeling(int N, int K, LabelMode mode, F&& visit) {
  if (mode == LabelMode::Multilabel) {
    const std::uint64_t total = std::uint64_t{1} << (N * K);
    Eigen::MatrixXd y(N, K);
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      for (int v = 0; v < N * K; ++v) y(v / K, v % K) = (mask >> (N * K - 1 - v)) & 1U ? 1.0 : 0.0;
      visit(y);
    }
    return;
  }
  const int options = mode == LabelMode::AtMostOne ? K + 1 : K;
  std::vector<int> digit(static_cast<std::size_t>(N), 0);
  Eigen::MatrixXd y(N, K);
  while (true) {
    y.setZero();
    for (int i = 0; i < N; ++i) {
      const int o = mode == LabelMode::AtMostOne ? digit[static_cast<std::size_t>(i)] - 1 : digit[static_cast<std::size_t>(i)];
      if (o >= 0) y(i, o) = 1.0;
    }
    visit(y);
    int pos = N - 1;
    while (pos >= 0 && ++digit[static_cast<std::size_t>(pos)] == options) digit[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
  }
}

}  // namespace scenectx::testing

namespace scenectx::testing {

/// Grid of points origin + i*step*a + j*step*b on camera 0, with a color.
inline void add_patch(Scene& scene, const Vec3& origin, const Vec3& a, const Vec3& b, int na, int nb, double step,
                      const Vec3& color = Vec3(0.5, 0.5, 0.5), int camera = 0) {
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      ScenePoint p;
      p.position = origin + i * step * a + j * step * b;
      p.color = color;
      p.camera = camera;
      scene.points.push_back(p);
    }
  }
}

inline std::vector<std::size_t> index_range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(i);
  return out;
}

inline std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("scenectx_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace scenectx::testing
