#include "scenectx/model.hpp"

#include <fstream>
#include <sstream>

namespace scenectx {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::NodeOnly: return "node_only";
    case Variant::Assoc: return "assoc";
    case Variant::NonAssoc: return "nonassoc";
    case Variant::Parsimon: return "parsimon";
  }
  return "parsimon";
}

Variant variant_from_string(const std::string& text) {
  if (text == "node_only" || text == "svm_node_only") return Variant::NodeOnly;
  if (text == "assoc" || text == "svm_mrf_assoc") return Variant::Assoc;
  if (text == "nonassoc" || text == "svm_mrf_nonassoc") return Variant::NonAssoc;
  if (text == "parsimon" || text == "svm_mrf_parsimon") return Variant::Parsimon;
  throw UsageError("unknown model variant '" + text + "'");
}

namespace {

std::vector<int> binned_type_dims(const FeatureBinners& binners) {
  std::vector<int> dims;
  for (const auto& spec : edge_type_specs()) {
    int d = 0;
    for (int f = spec.raw_begin; f < spec.raw_begin + spec.raw_count; ++f) d += binners.edge.output_width(f);
    dims.push_back(d);
  }
  return dims;
}

}  // namespace

ModelStructure::ModelStructure(Taxonomy taxonomy, Variant variant, const FeatureBinners& binners)
    : taxonomy_(std::move(taxonomy)), variant_(variant), node_dim_(binners.node.output_dim()) {
  if (binners.node.raw_dim() != node_raw::kSize || binners.edge.raw_dim() != edge_raw::kSize) {
    throw DataError("binners do not match the feature layout");
  }
  layout(binned_type_dims(binners));
}

ModelStructure::ModelStructure(Taxonomy taxonomy, Variant variant, int node_dim, const std::vector<int>& edge_type_dims)
    : taxonomy_(std::move(taxonomy)), variant_(variant), node_dim_(node_dim) {
  if (edge_type_dims.size() != edge_type_specs().size()) throw UsageError("one dimension per edge type is required");
  layout(edge_type_dims);
}

void ModelStructure::layout(const std::vector<int>& edge_type_dims) {
  const int K = taxonomy_.size();
  if (K < 1) throw DataError("model structure needs at least one class");
  types_.clear();
  pair_index_.clear();
  std::size_t offset = static_cast<std::size_t>(K) * static_cast<std::size_t>(node_dim_);
  int feature_offset = 0;
  const auto& specs = edge_type_specs();
  for (std::size_t t = 0; t < specs.size(); ++t) {
    EdgeTypeBlock block;
    block.name = specs[t].name;
    block.dim = edge_type_dims[t];
    block.feature_offset = feature_offset;
    feature_offset += block.dim;
    for (int l = 0; l < K; ++l) {
      for (int k = 0; k < K; ++k) {
        bool include = false;
        switch (variant_) {
          case Variant::NodeOnly: include = false; break;
          case Variant::Assoc: include = l == k; break;
          case Variant::NonAssoc: include = true; break;
          case Variant::Parsimon: include = specs[t].object_associative ? taxonomy_.same_object(l, k) : true; break;
        }
        if (include) block.class_pairs.emplace_back(l, k);
      }
    }
    block.weight_offset = static_cast<int>(offset);
    offset += block.class_pairs.size() * static_cast<std::size_t>(block.dim);
    std::vector<int> index(static_cast<std::size_t>(K * K), -1);
    for (std::size_t p = 0; p < block.class_pairs.size(); ++p) {
      index[static_cast<std::size_t>(block.class_pairs[p].first * K + block.class_pairs[p].second)] = static_cast<int>(p);
    }
    types_.push_back(std::move(block));
    pair_index_.push_back(std::move(index));
  }
  edge_dim_ = feature_offset;
  size_ = offset;
}

std::optional<std::size_t> ModelStructure::edge_offset(int type, int l, int k) const {
  if (type < 0 || static_cast<std::size_t>(type) >= types_.size()) return std::nullopt;
  const int K = classes();
  if (l < 0 || k < 0 || l >= K || k >= K) return std::nullopt;
  const int p = pair_index_[static_cast<std::size_t>(type)][static_cast<std::size_t>(l * K + k)];
  if (p < 0) return std::nullopt;
  const auto& block = types_[static_cast<std::size_t>(type)];
  return static_cast<std::size_t>(block.weight_offset) + static_cast<std::size_t>(p) * static_cast<std::size_t>(block.dim);
}

nlohmann::json ModelStructure::descriptor() const {
  nlohmann::json j;
  j["variant"] = to_string(variant_);
  j["classes"] = taxonomy_.classes();
  j["objects"] = taxonomy_.objects();
  j["taxonomy_hash"] = std::to_string(taxonomy_.hash());
  j["node_dim"] = node_dim_;
  nlohmann::json types = nlohmann::json::array();
  for (const auto& block : types_) {
    types.push_back({{"name", block.name}, {"dim", block.dim}, {"pairs", block.class_pairs.size()}});
  }
  j["edge_types"] = types;
  j["block_order"] = "node[k] for k < K, then edge[t][(l,k) lexicographic within T_t] for t in type order";
  j["parameter_count"] = size_;
  return j;
}

ModelStructure ModelStructure::from_descriptor(const nlohmann::json& j) {
  Taxonomy taxonomy(j.at("classes").get<std::vector<std::string>>(), j.at("objects").get<std::vector<std::string>>());
  if (j.contains("taxonomy_hash") && j.at("taxonomy_hash").get<std::string>() != std::to_string(taxonomy.hash())) {
    throw DataError("model: taxonomy hash does not match its class list");
  }
  std::vector<int> dims;
  const auto& types = j.at("edge_types");
  if (types.size() != edge_type_specs().size()) throw DataError("model: edge type count mismatch");
  for (std::size_t t = 0; t < types.size(); ++t) {
    if (types[t].at("name").get<std::string>() != edge_type_specs()[t].name) throw DataError("model: edge type order mismatch");
    dims.push_back(types[t].at("dim").get<int>());
  }
  ModelStructure s(std::move(taxonomy), variant_from_string(j.at("variant").get<std::string>()),
                   j.at("node_dim").get<int>(), dims);
  if (j.contains("parameter_count") && j.at("parameter_count").get<std::size_t>() != s.parameter_count()) {
    throw DataError("model: parameter count does not match the structure");
  }
  return s;
}

std::size_t parameter_count(const ModelStructure& structure) { return structure.parameter_count(); }

Weights::Weights(ModelStructure s, Eigen::VectorXd values) : structure(std::move(s)), w(std::move(values)) {
  if (static_cast<std::size_t>(w.size()) != structure.parameter_count()) {
    throw DataError("weight vector length " + std::to_string(w.size()) + " does not match structure (" +
                    std::to_string(structure.parameter_count()) + ")");
  }
}

namespace {

void check_graph(const ModelStructure& s, const SceneGraph& graph) {
  if (!graph.has_binned_features()) throw DataError("graph '" + graph.scene_name + "' has no binned features");
  for (const auto& f : graph.node_features) {
    if (f.size() != s.node_dim()) throw DataError("node feature dimension mismatch");
  }
  for (const auto& pair : graph.edge_features) {
    if (pair[0].size() != s.edge_dim() || pair[1].size() != s.edge_dim()) throw DataError("edge feature dimension mismatch");
  }
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

Potentials compute_potentials(const Weights& weights, const SceneGraph& graph) {
  const auto& s = weights.structure;
  check_graph(s, graph);
  const int N = graph.size(), K = s.classes();
  Potentials p;
  p.node.resize(N, K);
  const Eigen::Map<const RowMajor> node_w(weights.w.data(), K, s.node_dim());
  for (int i = 0; i < N; ++i) p.node.row(i) = (node_w * graph.node_features[static_cast<std::size_t>(i)]).transpose();

  bool any_edge_terms = false;
  for (const auto& block : s.edge_types()) any_edge_terms |= !block.class_pairs.empty();
  if (!any_edge_terms) return p;

  Eigen::VectorXd scratch;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(K, K);
    const auto& fe = graph.edge_features[e];
    for (const auto& block : s.edge_types()) {
      if (block.class_pairs.empty()) continue;
      const Eigen::Map<const RowMajor> w(weights.w.data() + block.weight_offset,
                                         static_cast<Eigen::Index>(block.class_pairs.size()), block.dim);
      scratch = w * fe[0].segment(block.feature_offset, block.dim);
      for (std::size_t q = 0; q < block.class_pairs.size(); ++q) {
        c(block.class_pairs[q].first, block.class_pairs[q].second) += scratch[static_cast<Eigen::Index>(q)];
      }
      // Reverse orientation (j,i) with pair (k,l) multiplies y_j^k y_i^l = y_i^l y_j^k.
      scratch = w * fe[1].segment(block.feature_offset, block.dim);
      for (std::size_t q = 0; q < block.class_pairs.size(); ++q) {
        c(block.class_pairs[q].second, block.class_pairs[q].first) += scratch[static_cast<Eigen::Index>(q)];
      }
    }
    p.pair.push_back(std::move(c));
    p.edges.emplace_back(graph.edges[e].i, graph.edges[e].j);
  }
  return p;
}

double pair_activation(double a, double b, double coefficient) {
  const bool integral = (a == 0.0 || a == 1.0) && (b == 0.0 || b == 1.0);
  if (integral) return a * b;
  return coefficient >= 0 ? std::min(a, b) : std::max(0.0, a + b - 1.0);
}

double score(const Potentials& potentials, const Labeling& labeling) {
  if (labeling.nodes() != potentials.nodes() || labeling.classes() != potentials.classes()) {
    throw DataError("labeling dimensions do not match the graph");
  }
  double total = potentials.constant + potentials.node.cwiseProduct(labeling.values).sum();
  const int K = potentials.classes();
  for (std::size_t e = 0; e < potentials.pair.size(); ++e) {
    const auto [i, j] = potentials.edges[e];
    const auto& c = potentials.pair[e];
    for (int l = 0; l < K; ++l) {
      const double a = labeling.values(i, l);
      if (a == 0.0) continue;
      for (int k = 0; k < K; ++k) total += c(l, k) * pair_activation(a, labeling.values(j, k), c(l, k));
    }
  }
  return total;
}

double discriminant(const Weights& weights, const SceneGraph& graph, const Labeling& labeling) {
  if (labeling.nodes() != graph.size() || labeling.classes() != weights.structure.classes()) {
    throw DataError("labeling dimensions do not match the graph / class count");
  }
  return score(compute_potentials(weights, graph), labeling);
}

Eigen::VectorXd build_joint_feature(const ModelStructure& structure, const SceneGraph& graph, const Labeling& labeling,
                                    const Weights* weights) {
  check_graph(structure, graph);
  const int N = graph.size(), K = structure.classes();
  if (labeling.nodes() != N || labeling.classes() != K) throw DataError("labeling dimensions do not match the graph");
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(structure.parameter_count()));
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < K; ++k) {
      const double y = labeling.values(i, k);
      if (y == 0.0) continue;
      psi.segment(static_cast<Eigen::Index>(structure.node_offset(k)), structure.node_dim()) +=
          y * graph.node_features[static_cast<std::size_t>(i)];
    }
  }

  bool any_edge_terms = false;
  for (const auto& block : structure.edge_types()) any_edge_terms |= !block.class_pairs.empty();
  if (!any_edge_terms) return psi;

  std::optional<Potentials> potentials;
  if (weights != nullptr && !labeling.is_integral()) {
    if (!(weights->structure == structure)) throw DataError("weights belong to a different structure");
    potentials = compute_potentials(*weights, graph);
  }
  Eigen::MatrixXd z(K, K);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const int i = graph.edges[e].i, j = graph.edges[e].j;
    bool any = false;
    for (int l = 0; l < K; ++l) {
      for (int k = 0; k < K; ++k) {
        const double a = labeling.values(i, l), b = labeling.values(j, k);
        const double coefficient = potentials ? potentials->pair[e](l, k) : 0.0;
        z(l, k) = pair_activation(a, b, coefficient);
        any |= z(l, k) != 0.0;
      }
    }
    if (!any) continue;
    const auto& fe = graph.edge_features[e];
    for (std::size_t t = 0; t < structure.edge_types().size(); ++t) {
      const auto& block = structure.edge_types()[t];
      for (const auto& [l, k] : block.class_pairs) {
        const auto offset = static_cast<Eigen::Index>(*structure.edge_offset(static_cast<int>(t), l, k));
        // orientation (i,j): z_ij^{lk}; orientation (j,i): z_ji^{lk} = z(k, l)
        if (z(l, k) != 0.0) psi.segment(offset, block.dim) += z(l, k) * fe[0].segment(block.feature_offset, block.dim);
        if (z(k, l) != 0.0) psi.segment(offset, block.dim) += z(k, l) * fe[1].segment(block.feature_offset, block.dim);
      }
    }
  }
  return psi;
}

void save_model(const Model& model, const std::string& path) {
  nlohmann::json j;
  j["format"] = "scenectx-model/1";
  j["structure"] = model.weights.structure.descriptor();
  j["binners"] = model.binners.to_json();
  j["features"] = {{"bins", model.features.bins},
                   {"alpha_degrees", model.features.alpha_degrees},
                   {"tau", model.features.tau},
                   {"coplanarity_min_distance", model.features.coplanarity_min_distance}};
  j["training"] = model.training.is_null() ? nlohmann::json::object() : model.training;
  j["weights"] = std::vector<double>(model.weights.w.data(), model.weights.w.data() + model.weights.w.size());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file " + path);
  out << j.dump(1) << '\n';
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file " + path + ": " + e.what());
  }
  try {
    if (j.value("format", std::string()) != "scenectx-model/1") throw DataError("model file " + path + ": unknown format");
    Model m;
    auto structure = ModelStructure::from_descriptor(j.at("structure"));
    m.binners = FeatureBinners::from_json(j.at("binners"));
    if (!(ModelStructure(structure.taxonomy(), structure.variant(), m.binners) == structure)) {
      throw DataError("model file " + path + ": binners do not match the stored structure");
    }
    const auto values = j.at("weights").get<std::vector<double>>();
    m.weights = Weights(std::move(structure), Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
    const auto& f = j.at("features");
    m.features.bins = f.at("bins").get<int>();
    m.features.alpha_degrees = f.at("alpha_degrees").get<double>();
    m.features.tau = f.at("tau").get<double>();
    m.features.coplanarity_min_distance = f.at("coplanarity_min_distance").get<double>();
    m.training = j.value("training", nlohmann::json::object());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file " + path + ": " + e.what());
  }
}

Model load_model(const std::string& path, const Taxonomy& expected) {
  Model m = load_model(path);
  if (!(m.weights.structure.taxonomy() == expected)) {
    throw DataError("model file " + path + " was trained for a different taxonomy");
  }
  return m;
}

}  // namespace scenectx
