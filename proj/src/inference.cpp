#include "scenectx/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace scenectx {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double slack(double v) { return 1e-12 * std::max(1.0, std::abs(v)); }

Labeling to_labeling(const std::vector<double>& x, int N, int K, LabelMode mode) {
  Labeling y(N, K, mode);
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < K; ++k) y.values(i, k) = x[static_cast<std::size_t>(i * K + k)];
  }
  return y;
}

/// Branch and bound over the pseudo-Boolean form of the potentials.
class ExactSolver {
 public:
  ExactSolver(const Potentials& p, LabelMode mode, const ExactOptions& options, const std::vector<std::int8_t>* clamp)
      : p_(p), mode_(mode), options_(options), N_(p.nodes()), K_(p.classes()) {
    fixed_.assign(static_cast<std::size_t>(N_ * K_), -1);
    if (clamp != nullptr) {
      if (mode != LabelMode::Multilabel) throw UsageError("variable clamps are only supported in multilabel mode");
      if (clamp->size() != fixed_.size()) throw DataError("clamp size does not match the problem");
      fixed_ = *clamp;
    }
    incident_.resize(static_cast<std::size_t>(N_));
    double magnitude = 1.0;
    for (std::size_t e = 0; e < p.edges.size(); ++e) {
      incident_[static_cast<std::size_t>(p.edges[e].first)].push_back(e);
      incident_[static_cast<std::size_t>(p.edges[e].second)].push_back(e);
      magnitude += p.pair[e].cwiseAbs().sum();
    }
    magnitude += p.node.cwiseAbs().sum();
    penalty_ = magnitude;
  }

  InferenceResult run() {
    const auto start = Clock::now();
    deadline_ = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(options_.time_limit_seconds));
    InferenceResult result;
    if (N_ * K_ <= options_.exhaustive_limit) {
      enumerate();
      result.stats.exhaustive = true;
    } else {
      offer_greedy();
      search();
    }
    result.labeling = to_labeling(best_x_, N_, K_, mode_);
    result.objective = score(p_, result.labeling);
    result.integrality = 1.0;
    result.stats.nodes_expanded = expanded_;
    result.stats.optimal = !timed_out_;
    result.stats.wall_seconds = seconds_since(start);
    return result;
  }

 private:
  bool constrained() const { return mode_ != LabelMode::Multilabel; }
  std::size_t var(int i, int k) const { return static_cast<std::size_t>(i * K_ + k); }

  /// Option index per node in constrained modes: -1 = none, k = class.
  std::vector<int> options_of_node() const {
    std::vector<int> opts;
    if (mode_ == LabelMode::AtMostOne) opts.push_back(-1);
    for (int k = 0; k < K_; ++k) opts.push_back(k);
    return opts;
  }

  double objective(const std::vector<double>& x) const {
    double total = p_.constant;
    for (int i = 0; i < N_; ++i) {
      for (int k = 0; k < K_; ++k) total += p_.node(i, k) * x[var(i, k)];
    }
    for (std::size_t e = 0; e < p_.edges.size(); ++e) {
      const auto [i, j] = p_.edges[e];
      for (int l = 0; l < K_; ++l) {
        if (x[var(i, l)] == 0.0) continue;
        for (int k = 0; k < K_; ++k) total += p_.pair[e](l, k) * x[var(j, k)];
      }
    }
    return total;
  }

  void offer(const std::vector<double>& x, double value) {
    if (!have_best_ || value > best_) {
      best_ = value;
      best_x_ = x;
      have_best_ = true;
    }
  }

  bool out_of_time() {
    if (Clock::now() > deadline_) timed_out_ = true;
    return timed_out_;
  }

  /// Node scores alone; keeps an incumbent even if the time limit hits at once.
  void offer_greedy() {
    std::vector<double> x(fixed_.size(), 0.0);
    for (int i = 0; i < N_; ++i) {
      if (constrained()) {
        int pick = mode_ == LabelMode::AtMostOne ? -1 : 0;
        double best = mode_ == LabelMode::AtMostOne ? 0.0 : p_.node(i, 0);
        for (int k = 0; k < K_; ++k) {
          if (p_.node(i, k) > best) {
            best = p_.node(i, k);
            pick = k;
          }
        }
        if (pick >= 0) x[var(i, pick)] = 1.0;
      } else {
        for (int k = 0; k < K_; ++k) {
          const auto v = var(i, k);
          x[v] = fixed_[v] >= 0 ? fixed_[v] : (p_.node(i, k) > 0 ? 1.0 : 0.0);
        }
      }
    }
    offer(x, objective(x));
  }

  // ---- exhaustive enumeration (lexicographic; the first optimum found wins) ----

  void enumerate() {
    std::vector<double> x(fixed_.size(), 0.0);
    if (constrained()) {
      const auto opts = options_of_node();
      std::vector<std::size_t> digit(static_cast<std::size_t>(N_), 0);
      while (true) {
        std::fill(x.begin(), x.end(), 0.0);
        for (int i = 0; i < N_; ++i) {
          const int o = opts[digit[static_cast<std::size_t>(i)]];
          if (o >= 0) x[var(i, o)] = 1.0;
        }
        ++expanded_;
        offer(x, objective(x));
        int pos = N_ - 1;
        while (pos >= 0 && ++digit[static_cast<std::size_t>(pos)] == opts.size()) digit[static_cast<std::size_t>(pos--)] = 0;
        if (pos < 0) break;
        if ((expanded_ & 0xFFF) == 0 && out_of_time()) break;
      }
      if (N_ == 0) offer(x, objective(x));
      return;
    }
    std::vector<std::size_t> free_vars;
    for (std::size_t v = 0; v < fixed_.size(); ++v) {
      if (fixed_[v] < 0) {
        free_vars.push_back(v);
      } else {
        x[v] = fixed_[v];
      }
    }
    const std::uint64_t combos = std::uint64_t{1} << free_vars.size();
    for (std::uint64_t mask = 0; mask < combos; ++mask) {
      for (std::size_t b = 0; b < free_vars.size(); ++b) {
        // first free variable is the most significant bit
        x[free_vars[b]] = (mask >> (free_vars.size() - 1 - b)) & 1U ? 1.0 : 0.0;
      }
      ++expanded_;
      offer(x, objective(x));
      if ((expanded_ & 0xFFF) == 0 && out_of_time()) break;
    }
  }

  // ---- branch and bound ----

  struct Reduced {
    PseudoBoolean pb;
    std::vector<std::size_t> global;  // local index -> global variable
    std::vector<int> local;           // global -> local or -1
  };

  Reduced reduce() const {
    Reduced r;
    r.local.assign(fixed_.size(), -1);
    for (std::size_t v = 0; v < fixed_.size(); ++v) {
      if (fixed_[v] < 0) {
        r.local[v] = static_cast<int>(r.global.size());
        r.global.push_back(v);
      }
    }
    r.pb = PseudoBoolean(static_cast<int>(r.global.size()));
    r.pb.constant = p_.constant;
    for (int i = 0; i < N_; ++i) {
      for (int k = 0; k < K_; ++k) {
        const auto v = var(i, k);
        if (fixed_[v] == 1) {
          r.pb.constant += p_.node(i, k);
        } else if (fixed_[v] < 0) {
          r.pb.linear[static_cast<std::size_t>(r.local[v])] += p_.node(i, k);
        }
      }
    }
    for (std::size_t e = 0; e < p_.edges.size(); ++e) {
      const auto [i, j] = p_.edges[e];
      for (int l = 0; l < K_; ++l) {
        const auto u = var(i, l);
        if (fixed_[u] == 0) continue;
        for (int k = 0; k < K_; ++k) {
          const double c = p_.pair[e](l, k);
          if (c == 0.0) continue;
          const auto v = var(j, k);
          if (fixed_[v] == 0) continue;
          if (fixed_[u] == 1 && fixed_[v] == 1) {
            r.pb.constant += c;
          } else if (fixed_[u] == 1) {
            r.pb.linear[static_cast<std::size_t>(r.local[v])] += c;
          } else if (fixed_[v] == 1) {
            r.pb.linear[static_cast<std::size_t>(r.local[u])] += c;
          } else {
            r.pb.add_pair(r.local[u], r.local[v], c);
          }
        }
      }
    }
    if (constrained()) {
      // Penalizing two labels on one node leaves every feasible value unchanged.
      for (int i = 0; i < N_; ++i) {
        if (fixed_[var(i, 0)] >= 0) continue;
        for (int l = 0; l < K_; ++l) {
          for (int k = l + 1; k < K_; ++k) r.pb.add_pair(r.local[var(i, l)], r.local[var(i, k)], -penalty_);
        }
      }
    }
    return r;
  }

  int fixed_option(int i) const {
    for (int k = 0; k < K_; ++k) {
      if (fixed_[var(i, k)] == 1) return k;
    }
    return -1;
  }

  bool node_free(int i) const { return fixed_[var(i, 0)] < 0; }

  double edge_coefficient(std::size_t e, int node, int option, int other_option) const {
    if (option < 0 || other_option < 0) return 0.0;
    return p_.edges[e].first == node ? p_.pair[e](option, other_option) : p_.pair[e](other_option, option);
  }

  /// Sum of independent per-node and per-edge maxima; valid for constrained modes.
  double combinatorial_bound() const {
    const auto opts = options_of_node();
    double bound = p_.constant;
    for (int i = 0; i < N_; ++i) {
      if (node_free(i)) {
        double best = -std::numeric_limits<double>::infinity();
        for (int o : opts) {
          double v = o >= 0 ? p_.node(i, o) : 0.0;
          for (auto e : incident_[static_cast<std::size_t>(i)]) {
            const int other = p_.edges[e].first == i ? p_.edges[e].second : p_.edges[e].first;
            if (!node_free(other)) v += edge_coefficient(e, i, o, fixed_option(other));
          }
          best = std::max(best, v);
        }
        bound += best;
      } else {
        const int o = fixed_option(i);
        if (o >= 0) bound += p_.node(i, o);
      }
    }
    for (std::size_t e = 0; e < p_.edges.size(); ++e) {
      const auto [i, j] = p_.edges[e];
      const bool fi = node_free(i), fj = node_free(j);
      if (!fi && !fj) {
        bound += edge_coefficient(e, i, fixed_option(i), fixed_option(j));
      } else if (fi && fj) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a : opts) {
          for (int b : opts) best = std::max(best, edge_coefficient(e, i, a, b));
        }
        bound += best;
      }
    }
    return bound;
  }

  /// Complete assignment from the relaxed values, improved by coordinate ascent.
  std::vector<double> round_and_improve(const Reduced& r, const std::vector<double>& relaxed) const {
    std::vector<double> x(fixed_.size(), 0.0);
    for (std::size_t v = 0; v < fixed_.size(); ++v) {
      if (fixed_[v] >= 0) x[v] = fixed_[v];
    }
    const auto opts = options_of_node();
    if (constrained()) {
      for (int i = 0; i < N_; ++i) {
        if (!node_free(i)) continue;
        int pick = mode_ == LabelMode::AtMostOne ? -1 : 0;
        double best_y = -1, best_a = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K_; ++k) {
          const double yk = relaxed[static_cast<std::size_t>(r.local[var(i, k)])];
          if (yk > best_y || (yk == best_y && p_.node(i, k) > best_a)) {
            best_y = yk;
            best_a = p_.node(i, k);
            pick = k;
          }
        }
        if (mode_ == LabelMode::AtMostOne && best_y == 0.0) pick = -1;
        if (pick >= 0) x[var(i, pick)] = 1.0;
      }
    } else {
      for (std::size_t l = 0; l < r.global.size(); ++l) {
        const double v = relaxed[l];
        x[r.global[l]] = v == 0.5 ? (r.pb.linear[l] > 0 ? 1.0 : 0.0) : v;
      }
    }

    auto current_option = [&](int i) {
      for (int k = 0; k < K_; ++k) {
        if (x[var(i, k)] == 1.0) return k;
      }
      return -1;
    };
    for (int sweep = 0; sweep < 20; ++sweep) {
      bool changed = false;
      for (int i = 0; i < N_; ++i) {
        if (constrained()) {
          if (!node_free(i)) continue;
          const int cur = current_option(i);
          auto local_value = [&](int o) {
            double v = o >= 0 ? p_.node(i, o) : 0.0;
            for (auto e : incident_[static_cast<std::size_t>(i)]) {
              const int other = p_.edges[e].first == i ? p_.edges[e].second : p_.edges[e].first;
              v += edge_coefficient(e, i, o, current_option(other));
            }
            return v;
          };
          int best_o = cur;
          double best_v = local_value(cur);
          for (int o : opts) {
            const double v = local_value(o);
            if (v > best_v + slack(best_v)) {
              best_v = v;
              best_o = o;
            }
          }
          if (best_o != cur) {
            if (cur >= 0) x[var(i, cur)] = 0.0;
            if (best_o >= 0) x[var(i, best_o)] = 1.0;
            changed = true;
          }
        } else {
          for (int k = 0; k < K_; ++k) {
            const auto v = var(i, k);
            if (fixed_[v] >= 0) continue;
            double gain = p_.node(i, k);
            for (auto e : incident_[static_cast<std::size_t>(i)]) {
              const bool first = p_.edges[e].first == i;
              const int other = first ? p_.edges[e].second : p_.edges[e].first;
              for (int m = 0; m < K_; ++m) gain += (first ? p_.pair[e](k, m) : p_.pair[e](m, k)) * x[var(other, m)];
            }
            const double want = gain > slack(gain) ? 1.0 : (gain < -slack(gain) ? 0.0 : x[v]);
            if (want != x[v]) {
              x[v] = want;
              changed = true;
            }
          }
        }
      }
      if (!changed) break;
    }
    return x;
  }

  void search() {
    if (out_of_time()) return;
    ++expanded_;
    const Reduced r = reduce();
    if (r.global.empty()) {
      std::vector<double> x(fixed_.size());
      for (std::size_t v = 0; v < x.size(); ++v) x[v] = fixed_[v];
      offer(x, objective(x));
      return;
    }
    const RoofDualSolution rd = solve_roof_dual(r.pb);
    double bound = rd.objective;
    if (constrained()) bound = std::min(bound, combinatorial_bound());
    if (have_best_ && bound <= best_ + slack(best_)) return;

    const auto heuristic = round_and_improve(r, rd.values);
    offer(heuristic, objective(heuristic));

    // Branch selection.
    if (constrained()) {
      int branch_node = -1;
      double most_fractional = -1;
      for (int i = 0; i < N_; ++i) {
        if (!node_free(i)) continue;
        double sum = 0, fractional = 0;
        for (int k = 0; k < K_; ++k) {
          const double yk = rd.values[static_cast<std::size_t>(r.local[var(i, k)])];
          sum += yk;
          if (yk == 0.5) fractional += 1;
        }
        const bool feasible = fractional == 0 && (sum == 1.0 || (mode_ == LabelMode::AtMostOne && sum == 0.0));
        if (feasible) continue;
        const double key = fractional + std::abs(sum - 1.0);
        if (key > most_fractional) {
          most_fractional = key;
          branch_node = i;
        }
      }
      if (branch_node < 0) {
        // Relaxation is integral and feasible: optimal for this subproblem.
        std::vector<double> x(fixed_.size());
        for (std::size_t v = 0; v < x.size(); ++v) {
          x[v] = fixed_[v] >= 0 ? fixed_[v] : rd.values[static_cast<std::size_t>(r.local[v])];
        }
        offer(x, objective(x));
        return;
      }
      auto opts = options_of_node();
      auto relaxed_of = [&](int o) {
        if (o >= 0) return rd.values[static_cast<std::size_t>(r.local[var(branch_node, o)])];
        double s = 0;
        for (int k = 0; k < K_; ++k) s += rd.values[static_cast<std::size_t>(r.local[var(branch_node, k)])];
        return 1.0 - s;
      };
      std::stable_sort(opts.begin(), opts.end(), [&](int a, int b) {
        const double ya = relaxed_of(a), yb = relaxed_of(b);
        if (ya != yb) return ya > yb;
        const double sa = a >= 0 ? p_.node(branch_node, a) : 0.0, sb = b >= 0 ? p_.node(branch_node, b) : 0.0;
        return sa > sb;
      });
      for (int o : opts) {
        for (int k = 0; k < K_; ++k) fixed_[var(branch_node, k)] = k == o ? 1 : 0;
        search();
        if (timed_out_) break;
      }
      for (int k = 0; k < K_; ++k) fixed_[var(branch_node, k)] = -1;
      return;
    }

    int branch_local = -1;
    double strongest = -1;
    for (std::size_t l = 0; l < r.global.size(); ++l) {
      if (rd.values[l] != 0.5) continue;
      if (std::abs(r.pb.linear[l]) > strongest) {
        strongest = std::abs(r.pb.linear[l]);
        branch_local = static_cast<int>(l);
      }
    }
    if (branch_local < 0) {
      std::vector<double> x(fixed_.size());
      for (std::size_t v = 0; v < x.size(); ++v) {
        x[v] = fixed_[v] >= 0 ? fixed_[v] : rd.values[static_cast<std::size_t>(r.local[v])];
      }
      offer(x, objective(x));
      return;
    }
    const auto v = r.global[static_cast<std::size_t>(branch_local)];
    const std::int8_t first = r.pb.linear[static_cast<std::size_t>(branch_local)] > 0 ? 1 : 0;
    for (std::int8_t value : {first, static_cast<std::int8_t>(1 - first)}) {
      fixed_[v] = value;
      search();
      if (timed_out_) break;
    }
    fixed_[v] = -1;
  }

  const Potentials& p_;
  LabelMode mode_;
  ExactOptions options_;
  int N_, K_;
  std::vector<std::int8_t> fixed_;
  std::vector<std::vector<std::size_t>> incident_;
  double penalty_ = 0.0;
  double best_ = -std::numeric_limits<double>::infinity();
  std::vector<double> best_x_;
  bool have_best_ = false;
  std::size_t expanded_ = 0;
  Clock::time_point deadline_;
  bool timed_out_ = false;
};

}  // namespace

PseudoBoolean to_pseudo_boolean(const Potentials& potentials) {
  const int N = potentials.nodes(), K = potentials.classes();
  PseudoBoolean f(N * K);
  f.constant = potentials.constant;
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < K; ++k) f.linear[static_cast<std::size_t>(i * K + k)] = potentials.node(i, k);
  }
  for (std::size_t e = 0; e < potentials.edges.size(); ++e) {
    const auto [i, j] = potentials.edges[e];
    const auto& c = potentials.pair[e];
    for (int l = 0; l < K; ++l) {
      for (int k = 0; k < K; ++k) {
        if (c(l, k) != 0.0) f.add_pair(i * K + l, j * K + k, c(l, k));
      }
    }
  }
  return f;
}

InferenceResult infer_relaxed(const Potentials& potentials) {
  const auto start = Clock::now();
  const RoofDualSolution rd = solve_roof_dual(to_pseudo_boolean(potentials));
  InferenceResult result;
  result.labeling = to_labeling(rd.values, potentials.nodes(), potentials.classes(), LabelMode::Multilabel);
  result.objective = score(potentials, result.labeling);
  result.integrality = result.labeling.integrality_fraction();
  result.stats.cut_value = rd.bound;
  result.stats.nodes_expanded = 1;
  result.stats.wall_seconds = seconds_since(start);
  return result;
}

InferenceResult infer_relaxed(const Weights& weights, const SceneGraph& graph) {
  const auto start = Clock::now();
  auto result = infer_relaxed(compute_potentials(weights, graph));
  result.stats.wall_seconds = seconds_since(start);
  return result;
}

InferenceResult infer_multilabel(const Potentials& potentials) { return infer_relaxed(potentials); }

InferenceResult infer_multilabel(const Weights& weights, const SceneGraph& graph) { return infer_relaxed(weights, graph); }

InferenceResult infer_exact(const Potentials& potentials, LabelMode mode, const ExactOptions& options,
                            const std::vector<std::int8_t>* clamp) {
  return ExactSolver(potentials, mode, options, clamp).run();
}

InferenceResult infer_exact(const Weights& weights, const SceneGraph& graph, LabelMode mode, const ExactOptions& options) {
  const auto start = Clock::now();
  auto result = infer_exact(compute_potentials(weights, graph), mode, options);
  result.stats.wall_seconds = seconds_since(start);
  return result;
}

PersistenceReport check_persistence(const Potentials& potentials, const InferenceResult& relaxed,
                                    const InferenceResult& exact, const ExactOptions& options) {
  const int N = potentials.nodes(), K = potentials.classes();
  if (relaxed.labeling.nodes() != N || exact.labeling.nodes() != N || relaxed.labeling.classes() != K) {
    throw DataError("persistence check: dimension mismatch");
  }
  PersistenceReport report;
  report.exact_objective = exact.objective;
  std::vector<std::int8_t> clamp(static_cast<std::size_t>(N * K), -1);
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < K; ++k) {
      const double v = relaxed.labeling.values(i, k);
      if (v == 0.0 || v == 1.0) {
        clamp[static_cast<std::size_t>(i * K + k)] = static_cast<std::int8_t>(v);
        ++report.integral_variables;
      }
    }
  }
  const auto clamped = infer_exact(potentials, LabelMode::Multilabel, options, &clamp);
  report.clamped_objective = clamped.objective;
  const double tol = 1e-9 * std::max(1.0, std::abs(exact.objective));
  report.persistent = clamped.objective >= exact.objective - tol;
  if (!report.persistent) {
    for (std::size_t v = 0; v < clamp.size(); ++v) {
      if (clamp[v] < 0) continue;
      std::vector<std::int8_t> single(clamp.size(), -1);
      single[v] = clamp[v];
      const auto r = infer_exact(potentials, LabelMode::Multilabel, options, &single);
      if (r.objective < exact.objective - tol) {
        report.violations.emplace_back(static_cast<int>(v) / K, static_cast<int>(v) % K);
      }
    }
  }
  return report;
}

}  // namespace scenectx
