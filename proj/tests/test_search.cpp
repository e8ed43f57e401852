#include "scenectx/features.hpp"
#include "scenectx/search.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace scenectx;
using namespace scenectx::testing;

namespace {

// floor, table top, monitor and an unlabeled box; keyboard is class 3
struct Desk {
  Scene scene;
  SceneGraph graph;
  FeatureBinners binners;
  SegmentLabels labels{{0, {0}}, {1, {1}}, {2, {2}}};
  Taxonomy taxonomy{{"floor", "tableTop", "monitor", "keyboard"}, {"floor", "table", "monitor", "keyboard"}};
  Vec3 camera{1.0, -0.8, 1.5};

  Desk() {
    scene.cameras = {camera};
    add_patch(scene, Vec3(0, -1, 0), Vec3::UnitX(), Vec3::UnitY(), 41, 51, 0.05);
    add_patch(scene, Vec3(0.5, 0.5, 0.75), Vec3::UnitX(), Vec3::UnitY(), 21, 13, 0.05);
    add_patch(scene, Vec3(0.8, 1.05, 0.9), Vec3::UnitX(), Vec3::UnitZ(), 9, 7, 0.05);
    add_patch(scene, Vec3(1.7, 0.0, 0.2), Vec3::UnitX(), Vec3::UnitZ(), 4, 4, 0.05);
    std::vector<int> seg(scene.points.size(), 0);
    std::size_t at = 41 * 51;
    for (int id = 1; id <= 3; ++id) {
      const std::size_t n = id == 1 ? 21 * 13 : id == 2 ? 9 * 7 : 16;
      std::fill(seg.begin() + static_cast<long>(at), seg.begin() + static_cast<long>(at + n), id);
      at += n;
    }
    graph = build_graph(scene, group_segments(seg), 0.3);
    compute_raw_features(scene, graph);
    binners = FeatureBinners::fit({&graph}, 10);
    binners.apply(graph);
  }

  ModelStructure structure(Variant v = Variant::NonAssoc) const { return ModelStructure(taxonomy, v, binners); }
};

int edge_type_index(const std::string& name) {
  const auto& specs = edge_type_specs();
  for (std::size_t t = 0; t < specs.size(); ++t) {
    if (specs[t].name == name) return static_cast<int>(t);
  }
  return -1;
}

}  // namespace

TEST(SampleGrid, UnitCubeThousand) {
  const Box box{Vec3::Zero(), Vec3::Ones()};
  const auto grid = sample_grid(box, 1000);
  ASSERT_EQ(grid.size(), 1000u);
  std::set<std::tuple<long, long, long>> seen;
  for (const auto& c : grid) {
    for (int a = 0; a < 3; ++a) {
      const double units = c[a] / 0.05;
      const long odd = std::lround(units);
      EXPECT_NEAR(units, static_cast<double>(odd), 1e-9);
      EXPECT_EQ(odd % 2, 1);
    }
    seen.insert({std::lround(c.x() * 100), std::lround(c.y() * 100), std::lround(c.z() * 100)});
  }
  EXPECT_EQ(seen.size(), 1000u);
  // index (ix * m + iy) * m + iz
  EXPECT_NEAR(grid[(3 * 10 + 5) * 10 + 7].x(), 0.35, 1e-12);
  EXPECT_NEAR(grid[(3 * 10 + 5) * 10 + 7].y(), 0.55, 1e-12);
  EXPECT_NEAR(grid[(3 * 10 + 5) * 10 + 7].z(), 0.75, 1e-12);
}

TEST(SampleGrid, SingleSampleIsTheCenter) {
  const Box box{Vec3(-1, 2, 0), Vec3(3, 4, 1)};
  const auto grid = sample_grid(box, 1);
  ASSERT_EQ(grid.size(), 1u);
  EXPECT_TRUE(grid[0].isApprox(box.center()));
}

TEST(SampleGrid, RandomBoxSpacing) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-5, 5), ext(0.1, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 lo(u(rng), u(rng), u(rng));
    const Vec3 size(ext(rng), ext(rng), ext(rng));
    const Box box{lo, lo + size};
    const auto grid = sample_grid(box, 1000);
    ASSERT_EQ(grid.size(), 1000u);
    for (const auto& c : grid) {
      EXPECT_TRUE((c.array() > box.min.array()).all() && (c.array() < box.max.array()).all());
    }
    for (int a = 0; a < 3; ++a) {
      // neighbors along one axis differ by extent / 10 on that axis only
      const std::size_t stride = a == 0 ? 100 : a == 1 ? 10 : 1;
      const Vec3 d = grid[stride] - grid[0];
      EXPECT_NEAR(d[a], size[a] / 10.0, 1e-12);
      EXPECT_NEAR(d.norm(), size[a] / 10.0, 1e-12);
    }
  }
  EXPECT_THROW(sample_grid(Box{Vec3::Zero(), Vec3(1, 0, 1)}, 10), DataError);
  EXPECT_THROW(sample_grid(Box{Vec3::Zero(), Vec3::Ones()}, 0), UsageError);
}

TEST(LocationFeatures, AboveTableTop) {
  Desk d;
  const Segment& table = d.graph.vertices[1];
  const Vec3 loc = table.centroid + Vec3(0, 0, 0.3);
  const auto raw = location_edge_raw(loc, table, 0.3, d.camera);
  EXPECT_NEAR(raw[0][edge_raw::kVerticalDisplacement], 0.3, 1e-12);
  EXPECT_NEAR(raw[1][edge_raw::kVerticalDisplacement], -0.3, 1e-12);
  EXPECT_NEAR(raw[0][edge_raw::kHorizontalDistance], 0.0, 1e-12);
  EXPECT_NEAR(raw[0][edge_raw::kDepthDifference], 0.0, 1e-12);
  EXPECT_EQ(raw[0][edge_raw::kCoplanarity], 0.0);
  EXPECT_EQ(raw[0][edge_raw::kNormalDot], 0.0);
}

TEST(LocationFeatures, BoundaryDistanceAtTheWall) {
  Desk d;
  const auto& b = d.graph.bounds;
  const Vec3 loc(b.center.x() + b.half_extent.x(), b.center.y(), 1.0);
  const auto raw = location_node_raw(loc, b);
  EXPECT_NEAR(raw[node_raw::kBoundaryDistance], 0.0, 1e-12);
  EXPECT_EQ(raw[node_raw::kHeight], 1.0);
  EXPECT_EQ(raw.segment(node_raw::kHsvHistogram, node_raw::kHeight).norm(), 0.0);
}

TEST(LocationFeatures, MatchOnePointSegmentRecomputation) {
  Desk d;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ux(0.0, 2.0), uy(-1.0, 1.5), uz(0.0, 1.4);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 loc(ux(rng), uy(rng), uz(rng));
    Scene s = d.scene;
    ScenePoint p;
    p.position = loc;
    s.points.push_back(p);
    const Segment h = segment_geometry(s, {s.points.size() - 1});
    for (int j = 0; j < d.graph.size(); ++j) {
      const Segment& seg = d.graph.vertices[static_cast<std::size_t>(j)];
      double nearest = 1e300;
      for (const auto& q : seg.positions) nearest = std::min(nearest, (q - loc).norm());
      const auto got = location_edge_raw(loc, seg, nearest, d.camera);
      const auto want_hj = edge_features_raw(h, seg, Vec3::Zero(), Vec3::Zero(), nearest);
      const auto want_jh = edge_features_raw(seg, h, Vec3::Zero(), Vec3::Zero(), nearest);
      for (int f : {edge_raw::kHorizontalDistance, edge_raw::kVerticalDisplacement, edge_raw::kMinDistance,
                    edge_raw::kDepthDifference}) {
        EXPECT_NEAR(got[0][f], want_hj[f], 1e-12) << f;
        EXPECT_NEAR(got[1][f], want_jh[f], 1e-12) << f;
      }
    }
    const auto node = node_features_raw(s, h, d.graph.bounds);
    const auto loc_node = location_node_raw(loc, d.graph.bounds);
    EXPECT_NEAR(loc_node[node_raw::kHeight], node[node_raw::kHeight], 1e-12);
    EXPECT_NEAR(loc_node[node_raw::kBoundaryDistance], node[node_raw::kBoundaryDistance], 1e-12);
  }
}

TEST(LocationFeatures, BinningClearsNonLocationBits) {
  Desk d;
  Eigen::VectorXd raw = Eigen::VectorXd::Constant(edge_raw::kSize, 0.5);
  const auto binned = bin_location_edge(d.binners, raw);
  const auto& e = d.binners.edge;
  for (int f = 0; f < edge_raw::kSize; ++f) {
    const bool location = f == edge_raw::kHorizontalDistance || f == edge_raw::kVerticalDisplacement ||
                          f == edge_raw::kMinDistance || f == edge_raw::kDepthDifference;
    if (!location) EXPECT_EQ(binned.segment(e.output_offset(f), e.output_width(f)).norm(), 0.0) << f;
  }
}

TEST(ContextSearch, ZeroWeightsGiveDegenerateField) {
  Desk d;
  const Weights w(d.structure());
  const ContextSearch search(w, d.binners, d.graph, d.labels, d.camera);
  const auto field = search.field(3, 1000);
  ASSERT_EQ(field.scores.size(), 1000u);
  for (double s : field.scores) EXPECT_EQ(s, 0.0);
  EXPECT_TRUE(field.degenerate);
  EXPECT_EQ(field.best, 0);
  EXPECT_FALSE(field.no_context);
}

TEST(ContextSearch, UnlabeledSegmentsAreNeverNeighbors) {
  Desk d;
  const Weights w(d.structure());
  const ContextSearch search(w, d.binners, d.graph, d.labels, d.camera);
  const Vec3 at_box = d.graph.vertices[3].centroid;
  for (int j : search.neighbors(at_box)) EXPECT_NE(j, 3);
  const auto aug = search.augment(3, at_box);
  for (std::size_t e = d.graph.edges.size(); e < aug.graph.edges.size(); ++e) EXPECT_NE(aug.graph.edges[e].i, 3);
}

TEST(ContextSearch, EmptyNeighborhoodScoresTheNodeTerm) {
  Desk d;
  std::mt19937_64 rng(3);
  const auto s = d.structure(Variant::Parsimon);
  const Weights w = random_weights(s, rng);
  const ContextSearch search(w, d.binners, d.graph, d.labels, d.camera);
  const auto field = search.field(3, 1000);
  int empty = 0;
  for (std::size_t i = 0; i < field.locations.size(); ++i) {
    if (field.neighbor_counts[i] != 0) continue;
    ++empty;
    const auto node = bin_location_node(d.binners, location_node_raw(field.locations[i], d.graph.bounds));
    EXPECT_EQ(field.scores[i], w.w.segment(static_cast<Eigen::Index>(s.node_offset(3)), s.node_dim()).dot(node));
  }
  EXPECT_GT(empty, 0);
}

TEST(ContextSearch, ArgmaxInvariantToConstantOffset) {
  Desk d;
  std::mt19937_64 rng(4);
  const Weights w = random_weights(d.structure(), rng);
  const ContextSearch search(w, d.binners, d.graph, d.labels, d.camera);
  const auto field = search.field(3, 1000);
  for (double rho : {-1e3, -2.5, 0.0, 7.0, 1e4}) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < field.scores.size(); ++i) {
      if (field.scores[i] + rho > field.scores[best] + rho) best = i;
    }
    EXPECT_EQ(static_cast<int>(best), field.best) << rho;
  }
  for (std::size_t i = 0; i < field.scores.size(); ++i) EXPECT_LE(field.scores[i], field.best_score());
}

TEST(ContextSearch, AugmentedGraphDiscriminantDiffersByAConstant) {
  Desk d;
  std::mt19937_64 rng(5);
  for (Variant v : {Variant::NonAssoc, Variant::Parsimon}) {
    const Weights w = random_weights(d.structure(v), rng);
    const ContextSearch search(w, d.binners, d.graph, d.labels, d.camera);
    const double rho = search.base_score();
    const auto grid = sample_grid(cloud_box(d.graph), 125);
    int with_context = 0;
    for (const auto& loc : grid) {
      int count = 0;
      const double s = search.score(3, loc, &count);
      with_context += count > 0;
      const auto aug = search.augment(3, loc);
      EXPECT_EQ(aug.graph.size(), d.graph.size() + 1);
      EXPECT_EQ(static_cast<int>(aug.graph.edges.size() - d.graph.edges.size()), count);
      EXPECT_NEAR(discriminant(w, aug.graph, aug.labeling) - s, rho, 1e-9);
    }
    EXPECT_GT(with_context, 0);
  }
}

TEST(ContextSearch, KeyboardInFrontOfAndBelowMonitor) {
  Desk d;
  const auto s = d.structure();
  Weights w(s);
  const int keyboard = 3, monitor = 2;
  const auto& types = s.edge_types();
  // reward h below the monitor (small E4(h, monitor)) and nearer the camera (large E9(h, monitor))
  const int e4 = edge_type_index("E4_vertical"), e9 = edge_type_index("E9_depth");
  ASSERT_GE(e4, 0);
  ASSERT_GE(e9, 0);
  const auto off4 = s.edge_offset(e4, keyboard, monitor);
  const auto off9 = s.edge_offset(e9, keyboard, monitor);
  ASSERT_TRUE(off4 && off9);
  w.w.segment(static_cast<Eigen::Index>(*off4), types[static_cast<std::size_t>(e4)].dim).setConstant(1.0);
  w.w.segment(static_cast<Eigen::Index>(*off9), types[static_cast<std::size_t>(e9)].dim).setConstant(-1.0);

  const ContextSearch search(w, d.binners, d.graph, d.labels, d.camera);
  const auto field = search.field(keyboard, 1000);
  EXPECT_FALSE(field.degenerate);
  const Segment& m = d.graph.vertices[2];
  auto depth = [&](const Vec3& p) { return (p - d.camera).head<2>().norm(); };
  const Vec3 ol = field.optimal_location();
  EXPECT_LT(ol.z(), m.centroid.z());
  EXPECT_LT(depth(ol), depth(m.centroid));
  // every sample on the wrong side scores strictly lower
  for (std::size_t i = 0; i < field.locations.size(); ++i) {
    const Vec3& p = field.locations[i];
    if (p.z() >= m.centroid.z() || depth(p) >= depth(m.centroid)) EXPECT_LT(field.scores[i], field.best_score());
  }
}

TEST(ContextSearch, RequiresLabelsAndMatchingBinner) {
  Desk d;
  const Weights w(d.structure());
  EXPECT_THROW(ContextSearch(w, d.binners, d.graph, SegmentLabels{}), DataError);
  FeatureBinners other = d.binners;
  other = FeatureBinners::fit({&d.graph}, 5);
  EXPECT_THROW(ContextSearch(w, other, d.graph, d.labels), DataError);
  const ContextSearch search(w, d.binners, d.graph, d.labels);
  EXPECT_THROW(search.score(7, Vec3::Zero()), UsageError);
}

TEST(Baseline, MidpointDistance) {
  const Box box{Vec3::Zero(), Vec3(2, 2, 2)};
  EXPECT_NEAR(midpoint_baseline_distance(box, Vec3(1, 1, 2)), 1.0, 1e-12);
}
