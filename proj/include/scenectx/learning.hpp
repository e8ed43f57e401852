#pragma once

#include "scenectx/inference.hpp"
#include "scenectx/model.hpp"
#include "scenectx/scene.hpp"

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace scenectx {

/// A graph with binned features and its integral ground truth. The graph
/// must outlive the example.
struct TrainingExample {
  const SceneGraph* graph = nullptr;
  Labeling truth;
};

struct TrainConfig {
  double C = 1.0;
  double epsilon = 0.01;
  int max_iterations = 500;
  int threads = 1;
  double qp_tolerance = 1e-8;  // relative to C
};

/// Sum over all N*K entries of |y - y_hat|.
double hamming_loss(const Labeling& y, const Labeling& y_hat);

struct SeparationResult {
  Labeling labeling;     // most violated, half-integral
  double loss = 0.0;     // Hamming loss against the truth
  double score = 0.0;    // w . Psi(x, labeling)
  double violation = 0.0;  // loss - w . (Psi(x, truth) - Psi(x, labeling))
};

/// Loss-augmented argmax over the unconstrained relaxation: the Hamming
/// loss is linear in y_hat for integral truth and goes into the node scores.
SeparationResult separation_oracle(const Weights& weights, const SceneGraph& graph, const Labeling& truth);

/// One aggregated constraint w . delta_psi >= loss - xi.
struct Constraint {
  Eigen::VectorXd delta_psi;
  double loss = 0.0;
};

struct QpSolution {
  Eigen::VectorXd w;
  double xi = 0.0;
  std::vector<double> alpha;  // one per constraint
  double primal = 0.0;        // 0.5 |w|^2 + C xi
  double dual = 0.0;
  std::size_t iterations = 0;
};

/// min 0.5 |w|^2 + C xi  s.t.  w . dpsi_j >= loss_j - xi, xi >= 0, solved in
/// the dual (alpha >= 0, sum alpha <= C) by pairwise coordinate ascent until
/// the duality gap is at most tolerance * C. `warm_start` may hold alphas
/// for a prefix of the constraints.
QpSolution solve_working_set_qp(const std::vector<Constraint>& constraints, double C, Eigen::Index dim,
                                const std::vector<double>* warm_start = nullptr, double tolerance = 1e-8);

struct IterationRecord {
  int iteration = 0;
  double xi = 0.0;
  double violation = 0.0;  // of the new aggregated constraint at the current w
  double objective = 0.0;  // QP primal after adding it
  double mean_loss = 0.0;
  std::size_t constraints = 0;
  double seconds = 0.0;
};

struct TrainResult {
  Weights weights;
  double xi = 0.0;
  bool converged = false;
  std::vector<IterationRecord> history;
};

/// 1-slack cutting-plane training with margin rescaling.
TrainResult train(const std::vector<TrainingExample>& examples, const ModelStructure& structure,
                  const TrainConfig& config, const std::function<void(const IterationRecord&)>& on_iteration = {});

}  // namespace scenectx
