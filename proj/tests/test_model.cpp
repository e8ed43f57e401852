#include "scenectx/model.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace scenectx;
using namespace scenectx::testing;

namespace {

// Direct sum over nodes, classes, edges, both orientations and every block.
double oracle_discriminant(const Weights& w, const SceneGraph& g, const Eigen::MatrixXd& y) {
  const auto& s = w.structure;
  const int K = s.classes();
  double total = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    for (int k = 0; k < K; ++k) {
      double dot = 0.0;
      for (int d = 0; d < s.node_dim(); ++d) {
        dot += w.w[static_cast<Eigen::Index>(s.node_offset(k)) + d] * g.node_features[static_cast<std::size_t>(i)][d];
      }
      total += y(i, k) * dot;
    }
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const int ends[2][2] = {{g.edges[e].i, g.edges[e].j}, {g.edges[e].j, g.edges[e].i}};
    for (int o = 0; o < 2; ++o) {
      const auto& phi = g.edge_features[e][static_cast<std::size_t>(o)];
      for (std::size_t t = 0; t < s.edge_types().size(); ++t) {
        const auto& block = s.edge_types()[t];
        for (int l = 0; l < K; ++l) {
          for (int k = 0; k < K; ++k) {
            const auto off = s.edge_offset(static_cast<int>(t), l, k);
            if (!off) continue;
            double dot = 0.0;
            for (int d = 0; d < block.dim; ++d) {
              dot += w.w[static_cast<Eigen::Index>(*off) + d] * phi[block.feature_offset + d];
            }
            total += y(ends[o][0], l) * y(ends[o][1], k) * dot;
          }
        }
      }
    }
  }
  return total;
}

Eigen::MatrixXd random_integral(std::mt19937_64& rng, int N, int K, LabelMode mode) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(N, K);
  std::uniform_int_distribution<int> cls(0, K - 1);
  std::bernoulli_distribution bit(0.3);
  for (int i = 0; i < N; ++i) {
    if (mode == LabelMode::Multilabel) {
      for (int k = 0; k < K; ++k) y(i, k) = bit(rng) ? 1.0 : 0.0;
    } else {
      y(i, cls(rng)) = 1.0;
    }
  }
  return y;
}

}  // namespace

TEST(ModelStructure, ParameterCountsPerVariant) {
  const int K = 17, Dn = 20;
  const auto dims = small_edge_dims();
  int total_edge = 0;
  for (int d : dims) total_edge += d;
  const Taxonomy tax = make_taxonomy(K);
  // objects o0..o7 hold two classes, o8 one: 8*4 + 1 same-object ordered pairs
  const int same_object_pairs = 33;
  const int assoc_dim = dims[0] + dims[1];

  const ModelStructure node_only(tax, Variant::NodeOnly, Dn, dims);
  const ModelStructure assoc(tax, Variant::Assoc, Dn, dims);
  const ModelStructure nonassoc(tax, Variant::NonAssoc, Dn, dims);
  const ModelStructure parsimon(tax, Variant::Parsimon, Dn, dims);
  EXPECT_EQ(node_only.parameter_count(), static_cast<std::size_t>(K * Dn));
  EXPECT_EQ(assoc.parameter_count(), static_cast<std::size_t>(K * Dn + K * total_edge));
  EXPECT_EQ(nonassoc.parameter_count(), static_cast<std::size_t>(K * Dn + K * K * total_edge));
  EXPECT_EQ(parsimon.parameter_count(),
            static_cast<std::size_t>(K * Dn + same_object_pairs * assoc_dim + K * K * (total_edge - assoc_dim)));
  EXPECT_LT(parsimon.parameter_count(), nonassoc.parameter_count());
  EXPECT_EQ(parameter_count(parsimon), parsimon.parameter_count());
}

TEST(ModelStructure, BlocksAreContiguousAndDisjoint) {
  const ModelStructure s(make_taxonomy(5), Variant::Parsimon, 7, small_edge_dims());
  std::size_t next = static_cast<std::size_t>(5 * 7);
  for (std::size_t t = 0; t < s.edge_types().size(); ++t) {
    const auto& block = s.edge_types()[t];
    for (const auto& [l, k] : block.class_pairs) {
      ASSERT_TRUE(s.edge_offset(static_cast<int>(t), l, k));
      EXPECT_EQ(*s.edge_offset(static_cast<int>(t), l, k), next);
      next += static_cast<std::size_t>(block.dim);
    }
  }
  EXPECT_EQ(next, s.parameter_count());
  // class 0 and 2 belong to different objects
  EXPECT_FALSE(s.edge_offset(0, 0, 2));
  EXPECT_TRUE(s.edge_offset(0, 0, 1));
  EXPECT_TRUE(s.edge_offset(2, 0, 2));
  EXPECT_EQ(ModelStructure::from_descriptor(s.descriptor()), s);
}

TEST(Discriminant, HandExample) {
  // two nodes, one edge, node-only features plus a single E1 block
  const Taxonomy tax({"a", "b"}, {"x", "x"});
  const ModelStructure s(tax, Variant::Assoc, 2, {1, 0, 0, 0, 0, 0, 0, 0});
  SceneGraph g;
  g.vertices.resize(2);
  g.node_features = {Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 1)};
  g.edges = {{0, 1, 0.0}};
  g.edge_features = {{Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, 2.0)}};
  Eigen::VectorXd w(6);
  // w_n^a, w_n^b, w_E1^{aa}, w_E1^{bb}
  w << 1, 2, -1, 3, 0.5, 4;
  const Weights weights(s, w);
  // y = (a, a): 1 + (1 + 2) + 0.5 * (1 + 2)
  EXPECT_DOUBLE_EQ(discriminant(weights, g, Labeling::from_classes({0, 0}, 2)), 5.5);
  // y = (a, b): 1 + (-1 + 3), no edge term
  EXPECT_DOUBLE_EQ(discriminant(weights, g, Labeling::from_classes({0, 1}, 2)), 3.0);
  // y = (b, b): -1 + 2 + 4 * 3
  EXPECT_DOUBLE_EQ(discriminant(weights, g, Labeling::from_classes({1, 1}, 2)), 13.0);
}

TEST(Discriminant, EqualsWeightDotJointFeature) {
  std::mt19937_64 rng(101);
  for (Variant v : {Variant::NodeOnly, Variant::Assoc, Variant::NonAssoc, Variant::Parsimon}) {
    const ModelStructure s(make_taxonomy(4), v, 6, small_edge_dims());
    for (int trial = 0; trial < 20; ++trial) {
      const SceneGraph g = random_graph(rng, 6, 0.5, 6, small_edge_dims());
      const Weights w = random_weights(s, rng);
      for (LabelMode mode : {LabelMode::ExactlyOne, LabelMode::Multilabel}) {
        Labeling y(6, 4, mode);
        y.values = random_integral(rng, 6, 4, mode);
        const double value = discriminant(w, g, y);
        EXPECT_NEAR(value, w.w.dot(build_joint_feature(s, g, y)), 1e-9);
        EXPECT_NEAR(value, oracle_discriminant(w, g, y.values), 1e-9);
        EXPECT_NEAR(value, score(compute_potentials(w, g), y), 1e-9);
      }
    }
  }
}

TEST(Discriminant, LinearInWeights) {
  std::mt19937_64 rng(5);
  const ModelStructure s(make_taxonomy(3), Variant::Parsimon, 4, small_edge_dims());
  const SceneGraph g = random_graph(rng, 5, 0.6, 4, small_edge_dims());
  const Weights w = random_weights(s, rng);
  const Weights u = random_weights(s, rng);
  const Labeling y = Labeling::from_classes({0, 1, 2, 1, 0}, 3);
  for (double c : {0.0, 0.5, 2.0, -3.0}) {
    const Weights scaled(s, c * w.w);
    EXPECT_NEAR(discriminant(scaled, g, y), c * discriminant(w, g, y), 1e-9);
  }
  const Weights sum(s, w.w + u.w);
  EXPECT_NEAR(discriminant(sum, g, y), discriminant(w, g, y) + discriminant(u, g, y), 1e-9);
}

TEST(Discriminant, FractionalEdgeActivationBySign) {
  EXPECT_EQ(pair_activation(1, 1, 2.0), 1.0);
  EXPECT_EQ(pair_activation(1, 0, -2.0), 0.0);
  EXPECT_EQ(pair_activation(0.5, 0.5, 1.0), 0.5);
  EXPECT_EQ(pair_activation(0.5, 0.5, -1.0), 0.0);
  EXPECT_EQ(pair_activation(0.5, 1.0, -1.0), 0.5);
  EXPECT_EQ(pair_activation(0.5, 0.0, 1.0), 0.0);

  std::mt19937_64 rng(9);
  const ModelStructure s(make_taxonomy(3), Variant::NonAssoc, 4, small_edge_dims());
  const SceneGraph g = random_graph(rng, 4, 0.8, 4, small_edge_dims());
  const Weights w = random_weights(s, rng);
  Labeling y(4, 3, LabelMode::Multilabel);
  std::uniform_int_distribution<int> half(0, 2);
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 3; ++k) y.values(i, k) = 0.5 * half(rng);
  }
  EXPECT_NEAR(discriminant(w, g, y), w.w.dot(build_joint_feature(s, g, y, &w)), 1e-9);
}

TEST(Weights, SizeMismatchIsRejected) {
  const ModelStructure s(make_taxonomy(2), Variant::Assoc, 3, small_edge_dims());
  EXPECT_THROW(Weights(s, Eigen::VectorXd::Zero(3)), Error);
  EXPECT_EQ(Weights(s).w.size(), static_cast<Eigen::Index>(s.parameter_count()));
}

TEST(Variant, StringRoundTrip) {
  for (Variant v : {Variant::NodeOnly, Variant::Assoc, Variant::NonAssoc, Variant::Parsimon}) {
    EXPECT_EQ(variant_from_string(to_string(v)), v);
  }
  EXPECT_THROW(variant_from_string("bogus"), Error);
}
