#pragma once

#include "scenectx/binner.hpp"
#include "scenectx/features.hpp"
#include "scenectx/scene.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace scenectx {

/// Which class pairs each edge feature type connects.
enum class Variant {
  NodeOnly,  // no edge terms
  Assoc,     // every type: self-loops (k,k) only
  NonAssoc,  // every type: all K^2 ordered pairs
  Parsimon,  // object-associative types: parts of the same object; others: all pairs
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& text);

/// One edge type block group in the weight vector.
struct EdgeTypeBlock {
  std::string name;
  int feature_offset = 0;  // start in the binned edge vector
  int dim = 0;
  std::vector<std::pair<int, int>> class_pairs;  // (l, k) in lexicographic order
  int weight_offset = 0;
};

/// Class set plus per-type class-pair graphs, and the weight layout:
/// node blocks w_n^k for k = 0..K-1, then for each edge type t (in
/// edge_type_specs() order) one block w_t^{lk} per pair (l,k) of T_t.
class ModelStructure {
 public:
  ModelStructure() = default;
  /// Dimensions come from the binners' output layout.
  ModelStructure(Taxonomy taxonomy, Variant variant, const FeatureBinners& binners);
  /// Explicit dimensions (one per entry of edge_type_specs()).
  ModelStructure(Taxonomy taxonomy, Variant variant, int node_dim, const std::vector<int>& edge_type_dims);

  const Taxonomy& taxonomy() const { return taxonomy_; }
  Variant variant() const { return variant_; }
  int classes() const { return taxonomy_.size(); }
  int node_dim() const { return node_dim_; }
  int edge_dim() const { return edge_dim_; }
  const std::vector<EdgeTypeBlock>& edge_types() const { return types_; }
  std::size_t parameter_count() const { return size_; }

  std::size_t node_offset(int k) const { return static_cast<std::size_t>(k) * static_cast<std::size_t>(node_dim_); }
  /// Weight offset of block (t, l, k), or nullopt when (l,k) is not in T_t.
  std::optional<std::size_t> edge_offset(int type, int l, int k) const;

  nlohmann::json descriptor() const;
  static ModelStructure from_descriptor(const nlohmann::json& j);

  bool operator==(const ModelStructure& other) const { return descriptor() == other.descriptor(); }

 private:
  void layout(const std::vector<int>& edge_type_dims);

  Taxonomy taxonomy_;
  Variant variant_ = Variant::Parsimon;
  int node_dim_ = 0;
  int edge_dim_ = 0;
  std::vector<EdgeTypeBlock> types_;
  std::vector<std::vector<int>> pair_index_;  // [type][l*K+k] -> index into class_pairs or -1
  std::size_t size_ = 0;
};

/// Parameter count of a structure (K * D_n + sum_t |T_t| * D_t).
std::size_t parameter_count(const ModelStructure& structure);

struct Weights {
  ModelStructure structure;
  Eigen::VectorXd w;

  Weights() = default;
  explicit Weights(ModelStructure s) : structure(std::move(s)), w(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(structure.parameter_count()))) {}
  Weights(ModelStructure s, Eigen::VectorXd values);
};

/// Linear scores induced by weights on one graph:
/// node(i,k) = w_n^k . phi_n(i); pair[e](l,k) is the total coefficient of
/// y_i^l y_j^k for edge e = (i,j), summed over types and both orientations.
struct Potentials {
  Eigen::MatrixXd node;                 // N x K
  std::vector<Eigen::MatrixXd> pair;    // per edge, K x K
  std::vector<std::pair<int, int>> edges;
  double constant = 0.0;

  int nodes() const { return static_cast<int>(node.rows()); }
  int classes() const { return static_cast<int>(node.cols()); }
};

Potentials compute_potentials(const Weights& weights, const SceneGraph& graph);

/// Value of the edge variable z for labeling values a, b and coefficient c:
/// the product for integral values; for fractional values the LP-optimal
/// choice min(a, b) when c >= 0, max(0, a + b - 1) when c < 0.
double pair_activation(double a, double b, double coefficient);

/// Objective of a (possibly half-integral) labeling under fixed potentials.
double score(const Potentials& potentials, const Labeling& labeling);

/// Sum over nodes and classes of y_i^k (w_n^k . phi_n(i)) plus the edge terms.
double discriminant(const Weights& weights, const SceneGraph& graph, const Labeling& labeling);

/// Psi(x, y) in the weight layout. For fractional labelings `weights`
/// selects each z by the sign of its coefficient (see pair_activation);
/// without weights z = min(y_i^l, y_j^k).
Eigen::VectorXd build_joint_feature(const ModelStructure& structure, const SceneGraph& graph, const Labeling& labeling,
                                    const Weights* weights = nullptr);

/// model.json: structure descriptor, feature binners and the flat weights.
struct Model {
  Weights weights;
  FeatureBinners binners;
  FeatureConfig features;
  nlohmann::json training;  // free-form provenance (C, epsilon, iterations, ...)
};

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);
/// Also refuses a model whose taxonomy differs from `expected`.
Model load_model(const std::string& path, const Taxonomy& expected);

}  // namespace scenectx
