#pragma once

#include "scenectx/scene.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <vector>

namespace scenectx {

/// Cumulative binning of raw scalars into nested binary indicators.
///
/// For a scalar with thresholds th_1 <= ... <= th_n (the 100i/n-th
/// nearest-rank percentiles of the fitting data), bit i is set when the
/// value is below th_i; the last bit is closed on the right so the fitted
/// maximum maps to exactly one set bit. Binary scalars pass through as one bit.
class Binner {
 public:
  Binner() = default;

  static Binner fit(const std::vector<Eigen::VectorXd>& rows, int bins, const std::vector<bool>& binary);

  Eigen::VectorXd apply(const Eigen::VectorXd& raw) const;

  int bins() const { return bins_; }
  int raw_dim() const { return static_cast<int>(binary_.size()); }
  int output_dim() const { return output_dim_; }
  /// First output index of raw scalar `index`, and its width.
  int output_offset(int index) const { return offsets_.at(static_cast<std::size_t>(index)); }
  int output_width(int index) const { return binary_.at(static_cast<std::size_t>(index)) ? 1 : bins_; }
  const std::vector<double>& thresholds(int index) const { return thresholds_.at(static_cast<std::size_t>(index)); }
  double minimum(int index) const { return minimum_.at(static_cast<std::size_t>(index)); }

  nlohmann::json to_json() const;
  static Binner from_json(const nlohmann::json& j);

  bool operator==(const Binner&) const = default;

 private:
  void finalize();

  int bins_ = 0;
  int output_dim_ = 0;
  std::vector<bool> binary_;
  std::vector<std::vector<double>> thresholds_;
  std::vector<double> minimum_;
  std::vector<int> offsets_;
};

/// Node and edge binners used together.
struct FeatureBinners {
  Binner node;
  Binner edge;

  /// Fits on the raw features of the given graphs (both edge orientations).
  static FeatureBinners fit(const std::vector<const SceneGraph*>& graphs, int bins);

  /// Fills node_features / edge_features from the raw features.
  void apply(SceneGraph& graph) const;

  nlohmann::json to_json() const;
  static FeatureBinners from_json(const nlohmann::json& j);

  bool operator==(const FeatureBinners&) const = default;
};

}  // namespace scenectx
