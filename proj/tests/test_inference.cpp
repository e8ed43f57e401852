#include "scenectx/inference.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace scenectx;
using namespace scenectx::testing;

namespace {

Potentials single_node(std::vector<double> scores) {
  Potentials p;
  p.node = Eigen::Map<Eigen::MatrixXd>(scores.data(), 1, static_cast<Eigen::Index>(scores.size()));
  return p;
}

Potentials random_potentials(std::mt19937_64& rng, int N, int K, double edge_probability) {
  const ModelStructure s(make_taxonomy(K), Variant::NonAssoc, 4, small_edge_dims());
  const auto g = random_graph(rng, N, edge_probability, 4, small_edge_dims());
  return compute_potentials(random_weights(s, rng), g);
}

struct Best {
  double value = -INFINITY;
  Eigen::MatrixXd y;
};

Best exhaustive(const Potentials& p, LabelMode mode) {
  Best best;
  for_each_labeling(p.nodes(), p.classes(), mode, [&](const Eigen::MatrixXd& y) {
    const double v = direct_score(p, y);
    if (v > best.value) {
      best.value = v;
      best.y = y;
    }
  });
  return best;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(InferExact, SingleNodeExactlyOne) {
  const auto r = infer_exact(single_node({2, -1, 0}), LabelMode::ExactlyOne);
  EXPECT_EQ(r.labeling.label_of(0), 0);
  EXPECT_DOUBLE_EQ(r.objective, 2.0);
  EXPECT_TRUE(r.stats.optimal);
}

TEST(InferExact, SingleNodeAtMostOneLeavesUnlabeled) {
  const auto r = infer_exact(single_node({-2, -1, -3}), LabelMode::AtMostOne);
  EXPECT_EQ(r.labeling.label_of(0), -1);
  EXPECT_DOUBLE_EQ(r.objective, 0.0);
}

TEST(InferExact, MatchesExhaustiveEnumeration) {
  for (int seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    const int N = 2 + seed % 5, K = 1 + seed % 3;
    const auto p = random_potentials(rng, N, K, 0.6);
    for (auto mode : {LabelMode::ExactlyOne, LabelMode::AtMostOne}) {
      const auto oracle = exhaustive(p, mode);
      ExactOptions branch_only;
      branch_only.exhaustive_limit = 0;
      const auto bb = infer_exact(p, mode, branch_only);
      const auto en = infer_exact(p, mode);
      ASSERT_LE(rel(bb.objective, oracle.value), 1e-9) << "seed " << seed;
      ASSERT_LE(rel(en.objective, oracle.value), 1e-9) << "seed " << seed;
      ASSERT_TRUE(bb.stats.optimal);
      bb.labeling.validate();
      if (en.stats.exhaustive) EXPECT_EQ(en.labeling.values, oracle.y) << "tie-breaking, seed " << seed;
    }
  }
}

TEST(InferExact, MultilabelMatchesExhaustive) {
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const int N = 2 + seed % 3, K = 1 + seed % 4;
    const auto p = random_potentials(rng, N, K, 0.7);
    const auto oracle = exhaustive(p, LabelMode::Multilabel);
    ExactOptions branch_only;
    branch_only.exhaustive_limit = 0;
    const auto r = infer_exact(p, LabelMode::Multilabel, branch_only);
    ASSERT_LE(rel(r.objective, oracle.value), 1e-9) << "seed " << seed;
  }
}

TEST(InferExact, AtMostOneObjectiveIsNonnegative) {
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(500 + seed);
    const auto p = random_potentials(rng, 8, 3, 0.4);
    ExactOptions branch_only;
    branch_only.exhaustive_limit = 0;
    EXPECT_GE(infer_exact(p, LabelMode::AtMostOne, branch_only).objective, -1e-12);
  }
}

TEST(InferExact, LargerInstancesAgreeWithEnumerationPath) {
  // N*K = 24 exceeds the default limit; compare branch and bound with forced enumeration.
  for (int seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(77 + seed);
    const auto p = random_potentials(rng, 8, 3, 0.5);
    ExactOptions enumerate;
    enumerate.exhaustive_limit = 1000;
    const auto a = infer_exact(p, LabelMode::ExactlyOne);
    const auto b = infer_exact(p, LabelMode::ExactlyOne, enumerate);
    EXPECT_FALSE(a.stats.exhaustive);
    EXPECT_TRUE(b.stats.exhaustive);
    EXPECT_LE(rel(a.objective, b.objective), 1e-9);
  }
}

TEST(InferExact, TimeLimitReportsIncumbent) {
  std::mt19937_64 rng(3);
  const auto p = random_potentials(rng, 40, 6, 0.5);
  ExactOptions quick;
  quick.time_limit_seconds = 0.0;
  const auto r = infer_exact(p, LabelMode::ExactlyOne, quick);
  EXPECT_FALSE(r.stats.optimal);
  EXPECT_EQ(r.labeling.nodes(), 40);
  r.labeling.validate();
}

TEST(InferRelaxed, HalfIntegralAndBoundsExact) {
  for (int seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(2000 + seed);
    const int N = 2 + seed % 4, K = 1 + seed % 3;
    const auto p = random_potentials(rng, N, K, 0.7);
    const auto r = infer_relaxed(p);
    ASSERT_TRUE(r.labeling.is_half_integral());
    const auto exact = exhaustive(p, LabelMode::Multilabel);
    ASSERT_GE(r.objective, exact.value - 1e-9 * std::max(1.0, std::abs(exact.value)));
    ASSERT_NEAR(r.objective, r.stats.cut_value, 1e-9 * std::max(1.0, std::abs(r.objective)));
  }
}

TEST(InferRelaxed, ObjectiveIsTheHalfIntegralLpOptimum) {
  for (int seed = 0; seed < 60; ++seed) {
    std::mt19937_64 rng(3000 + seed);
    const int N = 2 + seed % 3, K = 1 + seed % 2;
    const auto p = random_potentials(rng, N, K, 0.8);
    const auto f = to_pseudo_boolean(p);
    double best = -INFINITY;
    std::vector<double> x(static_cast<std::size_t>(N * K));
    std::size_t combos = 1;
    for (int v = 0; v < N * K; ++v) combos *= 3;
    for (std::size_t c = 0; c < combos; ++c) {
      std::size_t rest = c;
      for (auto& xv : x) {
        xv = 0.5 * static_cast<double>(rest % 3);
        rest /= 3;
      }
      best = std::max(best, relaxed_value(f, x));
    }
    const auto r = infer_relaxed(p);
    ASSERT_NEAR(r.objective, best, 1e-9 * std::max(1.0, std::abs(best))) << "seed " << seed;
  }
}

TEST(InferRelaxed, SubmodularTermsGiveIntegralExactSolution) {
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(4000 + seed);
    auto p = random_potentials(rng, 5, 3, 0.7);
    for (auto& c : p.pair) c = c.cwiseAbs();  // attractive: every product term rewarded
    const auto r = infer_relaxed(p);
    EXPECT_TRUE(r.labeling.is_integral());
    EXPECT_NEAR(r.objective, exhaustive(p, LabelMode::Multilabel).value, 1e-9);
  }
}

TEST(InferRelaxed, FrustratedTriangleIsFractional) {
  Potentials p;
  p.node = Eigen::MatrixXd::Constant(3, 1, 1.0);
  p.edges = {{0, 1}, {1, 2}, {0, 2}};
  p.pair.assign(3, Eigen::MatrixXd::Constant(1, 1, -2.0));
  const auto r = infer_relaxed(p);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r.labeling.values(i, 0), 0.5);
  EXPECT_DOUBLE_EQ(r.objective, 1.5);
  EXPECT_DOUBLE_EQ(exhaustive(p, LabelMode::Multilabel).value, 1.0);
}

TEST(InferRelaxed, ZeroWeightsGiveEmptyLabeling) {
  std::mt19937_64 rng(5);
  const ModelStructure s(make_taxonomy(3), Variant::Parsimon, 4, small_edge_dims());
  const auto g = random_graph(rng, 6, 0.5, 4, small_edge_dims());
  const auto r = infer_relaxed(Weights(s), g);
  EXPECT_TRUE(r.labeling.is_integral());
  EXPECT_EQ(r.labeling.values.sum(), 0.0);
  EXPECT_EQ(r.objective, 0.0);
}

TEST(InferMultilabel, IndependentPositiveScores) {
  const auto r = infer_multilabel(single_node({1.5, -0.5, 2.0}));
  EXPECT_EQ(r.labeling.values(0, 0), 1.0);
  EXPECT_EQ(r.labeling.values(0, 1), 0.0);
  EXPECT_EQ(r.labeling.values(0, 2), 1.0);
  EXPECT_EQ(infer_multilabel(single_node({-1, -2})).labeling.values.sum(), 0.0);
}

TEST(Persistence, ClampedOptimumEqualsUnclamped) {
  for (int seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(6000 + seed);
    const int N = 2 + seed % 5, K = 1 + seed % 3;
    const auto p = random_potentials(rng, N, K, 0.6);
    const auto relaxed = infer_relaxed(p);
    const auto exact = infer_exact(p, LabelMode::Multilabel);
    const auto report = check_persistence(p, relaxed, exact);
    ASSERT_TRUE(report.persistent) << "seed " << seed;
    ASSERT_TRUE(report.violations.empty());
  }
}

TEST(Persistence, ZeroWeightsTriviallyPersistent) {
  Potentials p;
  p.node = Eigen::MatrixXd::Zero(3, 2);
  const auto report = check_persistence(p, infer_relaxed(p), infer_exact(p, LabelMode::Multilabel));
  EXPECT_TRUE(report.persistent);
  EXPECT_EQ(report.integral_variables, 6U);
}

TEST(Inference, ObjectiveMatchesDiscriminant) {
  std::mt19937_64 rng(7);
  const ModelStructure s(make_taxonomy(4), Variant::Parsimon, 5, small_edge_dims());
  const auto g = random_graph(rng, 7, 0.5, 5, small_edge_dims());
  const auto w = random_weights(s, rng);
  for (const auto& r : {infer_relaxed(w, g), infer_exact(w, g, LabelMode::ExactlyOne)}) {
    const double d = discriminant(w, g, r.labeling);
    EXPECT_NEAR(r.objective, d, 1e-9 * std::max(1.0, std::abs(d)));
  }
}

TEST(Inference, ClassPermutationEquivariance) {
  std::mt19937_64 rng(8);
  const auto p = random_potentials(rng, 6, 3, 0.6);
  const std::vector<int> perm{2, 0, 1};
  Potentials q = p;
  for (int k = 0; k < 3; ++k) q.node.col(perm[static_cast<std::size_t>(k)]) = p.node.col(k);
  for (std::size_t e = 0; e < p.pair.size(); ++e) {
    for (int l = 0; l < 3; ++l) {
      for (int k = 0; k < 3; ++k) q.pair[e](perm[static_cast<std::size_t>(l)], perm[static_cast<std::size_t>(k)]) = p.pair[e](l, k);
    }
  }
  const auto a = infer_relaxed(p), b = infer_relaxed(q);
  const auto ea = infer_exact(p, LabelMode::ExactlyOne), eb = infer_exact(q, LabelMode::ExactlyOne);
  EXPECT_NEAR(ea.objective, eb.objective, 1e-9);
  for (int i = 0; i < 6; ++i) {
    for (int k = 0; k < 3; ++k) EXPECT_EQ(a.labeling.values(i, k), b.labeling.values(i, perm[static_cast<std::size_t>(k)]));
  }
}
