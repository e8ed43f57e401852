#include "scenectx/learning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace scenectx {

double hamming_loss(const Labeling& y, const Labeling& y_hat) {
  if (y.nodes() != y_hat.nodes() || y.classes() != y_hat.classes()) throw DataError("hamming_loss: dimension mismatch");
  return (y.values - y_hat.values).cwiseAbs().sum();
}

SeparationResult separation_oracle(const Weights& weights, const SceneGraph& graph, const Labeling& truth) {
  if (!truth.is_integral()) throw DataError("separation oracle needs an integral ground truth");
  Potentials p = compute_potentials(weights, graph);
  if (truth.nodes() != p.nodes() || truth.classes() != p.classes()) throw DataError("ground truth dimension mismatch");
  const Potentials plain = p;
  // |y - y_hat| = y + (1 - 2y) y_hat for y in {0, 1}.
  p.node.array() += 1.0 - 2.0 * truth.values.array();
  p.constant += truth.values.sum();
  const auto relaxed = infer_relaxed(p);

  SeparationResult out;
  out.labeling = relaxed.labeling;
  out.loss = hamming_loss(truth, out.labeling);
  out.score = score(plain, out.labeling);
  out.violation = out.loss - (score(plain, truth) - out.score);
  return out;
}

namespace {

/// Dual over m = n + 1 variables where index 0 is the slack (loss 0, zero
/// feature) so that sum alpha = C exactly. Returns the number of steps.
std::size_t solve_dual(const Eigen::MatrixXd& H, const Eigen::VectorXd& loss, double C, double tolerance,
                       Eigen::VectorXd& alpha) {
  const Eigen::Index m = H.rows();
  const Eigen::Index n = m - 1;
  Eigen::VectorXd gradient = loss - H * alpha;
  const double target = tolerance * C;
  const std::size_t max_steps = 200000 + 1000 * static_cast<std::size_t>(m);
  std::size_t steps = 0;
  for (; steps < max_steps; ++steps) {
    Eigen::Index up = 0, down = -1;
    gradient.maxCoeff(&up);
    double lowest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (alpha[j] > 0 && gradient[j] < lowest) {
        lowest = gradient[j];
        down = j;
      }
    }
    const double xi = std::max(0.0, gradient.tail(n).maxCoeff());
    const double gap = C * xi - alpha.tail(n).dot(gradient.tail(n));
    if (gap <= target || down < 0 || up == down) break;
    const double curvature = H(up, up) + H(down, down) - 2.0 * H(up, down);
    double step = alpha[down];
    if (curvature > 0) step = std::min(step, (gradient[up] - gradient[down]) / curvature);
    if (!(step > 0)) break;
    alpha[up] += step;
    alpha[down] -= step;
    if (alpha[down] < 1e-15 * C) alpha[down] = 0.0;
    gradient -= step * (H.col(up) - H.col(down));
  }
  return steps;
}

Eigen::VectorXd initial_alpha(std::size_t n, double C, const std::vector<double>* warm_start) {
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + 1));
  double used = 0.0;
  if (warm_start != nullptr) {
    for (std::size_t a = 0; a < std::min(n, warm_start->size()); ++a) {
      alpha[static_cast<Eigen::Index>(a + 1)] = std::max(0.0, (*warm_start)[a]);
      used += alpha[static_cast<Eigen::Index>(a + 1)];
    }
    if (used > C) {
      alpha *= C / used;
      used = C;
    }
  }
  alpha[0] = C - used;
  return alpha;
}

std::uint64_t hash_vector(const Eigen::VectorXd& v, double loss) {
  std::uint64_t h = fnv1a(std::string_view(reinterpret_cast<const char*>(v.data()), sizeof(double) * static_cast<std::size_t>(v.size())));
  return fnv1a(std::string_view(reinterpret_cast<const char*>(&loss), sizeof loss), h);
}

QpSolution finish(const std::vector<Constraint>& constraints, double C, Eigen::Index dim, const Eigen::VectorXd& alpha,
                  std::size_t steps) {
  QpSolution out;
  out.w = Eigen::VectorXd::Zero(dim);
  out.alpha.assign(constraints.size(), 0.0);
  out.iterations = steps;
  double dual_linear = 0.0;
  for (std::size_t a = 0; a < constraints.size(); ++a) {
    out.alpha[a] = alpha[static_cast<Eigen::Index>(a + 1)];
    if (out.alpha[a] != 0.0) out.w += out.alpha[a] * constraints[a].delta_psi;
    dual_linear += out.alpha[a] * constraints[a].loss;
  }
  // Recompute from w directly so that the reported slack is exact.
  double xi = 0.0;
  for (const auto& c : constraints) xi = std::max(xi, c.loss - out.w.dot(c.delta_psi));
  out.xi = xi;
  const double norm2 = out.w.squaredNorm();
  out.primal = 0.5 * norm2 + C * out.xi;
  out.dual = dual_linear - 0.5 * norm2;
  return out;
}

}  // namespace

QpSolution solve_working_set_qp(const std::vector<Constraint>& constraints, double C, Eigen::Index dim,
                                const std::vector<double>* warm_start, double tolerance) {
  if (!(C > 0)) throw UsageError("C must be positive");
  const std::size_t n = constraints.size();
  if (n == 0) return finish(constraints, C, dim, Eigen::VectorXd::Zero(1), 0);
  const auto m = static_cast<Eigen::Index>(n + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd loss = Eigen::VectorXd::Zero(m);
  for (std::size_t a = 0; a < n; ++a) {
    if (constraints[a].delta_psi.size() != dim) throw DataError("constraint dimension mismatch");
    const auto ia = static_cast<Eigen::Index>(a + 1);
    loss[ia] = constraints[a].loss;
    for (std::size_t b = 0; b <= a; ++b) {
      const auto ib = static_cast<Eigen::Index>(b + 1);
      H(ia, ib) = H(ib, ia) = constraints[a].delta_psi.dot(constraints[b].delta_psi);
    }
  }
  Eigen::VectorXd alpha = initial_alpha(n, C, warm_start);
  const auto steps = solve_dual(H, loss, C, tolerance, alpha);
  return finish(constraints, C, dim, alpha, steps);
}

TrainResult train(const std::vector<TrainingExample>& examples, const ModelStructure& structure,
                  const TrainConfig& config, const std::function<void(const IterationRecord&)>& on_iteration) {
  if (examples.empty()) throw UsageError("training needs at least one example");
  if (!(config.C > 0) || !(config.epsilon > 0)) throw UsageError("C and epsilon must be positive");
  const auto start = std::chrono::steady_clock::now();
  const auto dim = static_cast<Eigen::Index>(structure.parameter_count());
  const double n = static_cast<double>(examples.size());

  std::vector<Eigen::VectorXd> truth_psi(examples.size());
  for (std::size_t e = 0; e < examples.size(); ++e) {
    if (examples[e].graph == nullptr) throw UsageError("training example without a graph");
    truth_psi[e] = build_joint_feature(structure, *examples[e].graph, examples[e].truth);
  }

  TrainResult result;
  result.weights = Weights(structure);
  std::vector<Constraint> working;
  std::vector<double> alpha;
  std::unordered_set<std::uint64_t> seen;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(1, 1);
  Eigen::VectorXd losses = Eigen::VectorXd::Zero(1);
  double xi = 0.0;

  for (int it = 1; it <= config.max_iterations; ++it) {
    std::vector<SeparationResult> found(examples.size());
    std::vector<Eigen::VectorXd> delta(examples.size());
    parallel_for(examples.size(), config.threads, [&](std::size_t e) {
      found[e] = separation_oracle(result.weights, *examples[e].graph, examples[e].truth);
      delta[e] = truth_psi[e] - build_joint_feature(structure, *examples[e].graph, found[e].labeling, &result.weights);
    });
    Constraint c{Eigen::VectorXd::Zero(dim), 0.0};
    for (std::size_t e = 0; e < examples.size(); ++e) {
      c.delta_psi += delta[e];
      c.loss += found[e].loss;
    }
    c.delta_psi /= n;
    c.loss /= n;
    const double violation = c.loss - result.weights.w.dot(c.delta_psi);

    IterationRecord record;
    record.iteration = it;
    record.violation = violation;
    record.mean_loss = c.loss;
    if (violation <= xi + config.epsilon || !seen.insert(hash_vector(c.delta_psi, c.loss)).second) {
      result.converged = violation <= xi + config.epsilon;
      record.xi = xi;
      record.objective = 0.5 * result.weights.w.squaredNorm() + config.C * xi;
      record.constraints = working.size();
      record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.history.push_back(record);
      if (on_iteration) on_iteration(record);
      break;
    }
    working.push_back(std::move(c));
    const auto m = static_cast<Eigen::Index>(working.size() + 1);
    gram.conservativeResize(m, m);
    losses.conservativeResize(m);
    losses[0] = 0.0;
    losses[m - 1] = working.back().loss;
    gram.row(m - 1).setZero();
    gram.col(m - 1).setZero();
    for (Eigen::Index b = 1; b < m; ++b) {
      gram(m - 1, b) = gram(b, m - 1) = working.back().delta_psi.dot(working[static_cast<std::size_t>(b - 1)].delta_psi);
    }
    Eigen::VectorXd a = initial_alpha(working.size(), config.C, &alpha);
    const auto steps = solve_dual(gram, losses, config.C, config.qp_tolerance, a);
    const auto qp = finish(working, config.C, dim, a, steps);
    alpha = qp.alpha;
    result.weights.w = qp.w;
    xi = qp.xi;

    record.xi = xi;
    record.objective = qp.primal;
    record.constraints = working.size();
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(record);
    if (on_iteration) on_iteration(record);
  }
  result.xi = xi;
  return result;
}

}  // namespace scenectx
