#pragma once

#include "scenectx/model.hpp"
#include "scenectx/roof_dual.hpp"
#include "scenectx/scene.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace scenectx {

struct InferenceStats {
  std::size_t nodes_expanded = 0;
  double cut_value = 0.0;  // relaxed: roof-dual bound read from the min cut
  double wall_seconds = 0.0;
  bool optimal = true;
  bool exhaustive = false;
};

struct InferenceResult {
  Labeling labeling;
  double objective = 0.0;  // score of `labeling` under the potentials
  double integrality = 1.0;
  InferenceStats stats;
};

struct ExactOptions {
  double time_limit_seconds = 60.0;
  /// Enumerate all labelings instead of branching when N*K is at most this.
  int exhaustive_limit = 20;
};

/// Variables are indexed i*K + k.
PseudoBoolean to_pseudo_boolean(const Potentials& potentials);

/// Half-integral argmax of the LP relaxation without any per-node
/// constraint, solved by roof duality. Values 0.5 mark non-persistent variables.
InferenceResult infer_relaxed(const Potentials& potentials);
InferenceResult infer_relaxed(const Weights& weights, const SceneGraph& graph);

/// Same relaxation; several labels per segment are allowed by design.
InferenceResult infer_multilabel(const Potentials& potentials);
InferenceResult infer_multilabel(const Weights& weights, const SceneGraph& graph);

/// Globally optimal integral labeling under the mode's per-node constraint
/// (branch and bound with roof-dual bounds). `clamp` optionally fixes
/// variables (-1 free, 0, 1); only supported in multilabel mode.
InferenceResult infer_exact(const Potentials& potentials, LabelMode mode, const ExactOptions& options = {},
                            const std::vector<std::int8_t>* clamp = nullptr);
InferenceResult infer_exact(const Weights& weights, const SceneGraph& graph, LabelMode mode,
                            const ExactOptions& options = {});

struct PersistenceReport {
  bool persistent = true;
  double exact_objective = 0.0;
  double clamped_objective = 0.0;
  std::size_t integral_variables = 0;
  std::vector<std::pair<int, int>> violations;  // (node, class)
};

/// Re-solves the unconstrained problem exactly with every integral variable
/// of `relaxed` clamped and compares against the unclamped optimum `exact`.
PersistenceReport check_persistence(const Potentials& potentials, const InferenceResult& relaxed,
                                    const InferenceResult& exact, const ExactOptions& options = {});

}  // namespace scenectx
