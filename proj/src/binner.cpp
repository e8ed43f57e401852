#include "scenectx/binner.hpp"

#include "scenectx/features.hpp"

#include <algorithm>

namespace scenectx {

Binner Binner::fit(const std::vector<Eigen::VectorXd>& rows, int bins, const std::vector<bool>& binary) {
  if (rows.empty()) throw DataError("cannot fit a binner on an empty dataset");
  if (bins < 1) throw UsageError("bins must be at least 1");
  const auto dim = binary.size();
  Binner b;
  b.bins_ = bins;
  b.binary_ = binary;
  b.thresholds_.assign(dim, {});
  b.minimum_.assign(dim, 0.0);
  std::vector<double> column(rows.size());
  for (std::size_t f = 0; f < dim; ++f) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<std::size_t>(rows[r].size()) != dim) throw DataError("binner: raw feature dimension mismatch");
      column[r] = rows[r][static_cast<Eigen::Index>(f)];
    }
    std::sort(column.begin(), column.end());
    b.minimum_[f] = column.front();
    if (binary[f]) continue;
    const std::size_t count = column.size();
    for (int i = 1; i <= bins; ++i) {
      // nearest-rank percentile: rank = ceil(i * count / bins)
      const std::size_t rank = (static_cast<std::size_t>(i) * count + static_cast<std::size_t>(bins) - 1) /
                               static_cast<std::size_t>(bins);
      b.thresholds_[f].push_back(column[std::max<std::size_t>(rank, 1) - 1]);
    }
  }
  b.finalize();
  return b;
}

void Binner::finalize() {
  offsets_.clear();
  int offset = 0;
  for (std::size_t f = 0; f < binary_.size(); ++f) {
    offsets_.push_back(offset);
    offset += binary_[f] ? 1 : bins_;
  }
  output_dim_ = offset;
}

Eigen::VectorXd Binner::apply(const Eigen::VectorXd& raw) const {
  if (static_cast<std::size_t>(raw.size()) != binary_.size()) throw DataError("binner: raw feature dimension mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(output_dim_);
  for (std::size_t f = 0; f < binary_.size(); ++f) {
    const double v = raw[static_cast<Eigen::Index>(f)];
    const int base = offsets_[f];
    if (binary_[f]) {
      out[base] = v != 0.0 ? 1.0 : 0.0;
      continue;
    }
    const auto& th = thresholds_[f];
    for (int i = 0; i + 1 < bins_; ++i) out[base + i] = v < th[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    out[base + bins_ - 1] = v <= th.back() ? 1.0 : 0.0;
  }
  return out;
}

nlohmann::json Binner::to_json() const {
  nlohmann::json j;
  j["bins"] = bins_;
  j["binary"] = binary_;
  j["thresholds"] = thresholds_;
  j["minimum"] = minimum_;
  return j;
}

Binner Binner::from_json(const nlohmann::json& j) {
  Binner b;
  b.bins_ = j.at("bins").get<int>();
  b.binary_ = j.at("binary").get<std::vector<bool>>();
  b.thresholds_ = j.at("thresholds").get<std::vector<std::vector<double>>>();
  b.minimum_ = j.at("minimum").get<std::vector<double>>();
  if (b.bins_ < 1 || b.thresholds_.size() != b.binary_.size() || b.minimum_.size() != b.binary_.size()) {
    throw DataError("binner: inconsistent description");
  }
  for (std::size_t f = 0; f < b.binary_.size(); ++f) {
    const auto expected = b.binary_[f] ? 0u : static_cast<std::size_t>(b.bins_);
    if (b.thresholds_[f].size() != expected) throw DataError("binner: wrong threshold count");
    if (!std::is_sorted(b.thresholds_[f].begin(), b.thresholds_[f].end())) {
      throw DataError("binner: thresholds must be non-decreasing");
    }
  }
  b.finalize();
  return b;
}

FeatureBinners FeatureBinners::fit(const std::vector<const SceneGraph*>& graphs, int bins) {
  std::vector<Eigen::VectorXd> node_rows, edge_rows;
  for (const auto* g : graphs) {
    if (!g->has_raw_features()) throw DataError("graph '" + g->scene_name + "' has no raw features");
    node_rows.insert(node_rows.end(), g->node_raw.begin(), g->node_raw.end());
    for (const auto& pair : g->edge_raw) {
      edge_rows.push_back(pair[0]);
      edge_rows.push_back(pair[1]);
    }
  }
  FeatureBinners out;
  out.node = Binner::fit(node_rows, bins, node_binary_mask());
  if (edge_rows.empty()) {
    // No edges anywhere: a zero row keeps the layout well-defined.
    edge_rows.push_back(Eigen::VectorXd::Zero(edge_raw::kSize));
  }
  out.edge = Binner::fit(edge_rows, bins, edge_binary_mask());
  return out;
}

void FeatureBinners::apply(SceneGraph& graph) const {
  if (!graph.has_raw_features()) throw DataError("graph '" + graph.scene_name + "' has no raw features");
  graph.node_features.clear();
  graph.edge_features.clear();
  for (const auto& raw : graph.node_raw) graph.node_features.push_back(node.apply(raw));
  for (const auto& pair : graph.edge_raw) graph.edge_features.push_back({edge.apply(pair[0]), edge.apply(pair[1])});
}

nlohmann::json FeatureBinners::to_json() const { return {{"node", node.to_json()}, {"edge", edge.to_json()}}; }

FeatureBinners FeatureBinners::from_json(const nlohmann::json& j) {
  return {Binner::from_json(j.at("node")), Binner::from_json(j.at("edge"))};
}

}  // namespace scenectx
