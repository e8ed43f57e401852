#pragma once

#include <cstddef>
#include <vector>

namespace scenectx {

/// Quadratic pseudo-Boolean function to maximize:
///   constant + sum_v linear[v] x_v + sum_(u,v) coefficient x_u x_v,  x in {0,1}^n.
struct PseudoBoolean {
  struct Pair {
    int u = 0;
    int v = 0;
    double coefficient = 0.0;
  };

  int variables = 0;
  double constant = 0.0;
  std::vector<double> linear;
  std::vector<Pair> pairs;

  explicit PseudoBoolean(int n = 0) : variables(n), linear(static_cast<std::size_t>(n), 0.0) {}
  void add_pair(int u, int v, double coefficient) { pairs.push_back({u, v, coefficient}); }
};

/// Value of the standard LP relaxation at x in [0,1]^n, each product term
/// replaced by its best consistent z (min(x_u,x_v) or max(0, x_u+x_v-1)).
double relaxed_value(const PseudoBoolean& f, const std::vector<double>& x);

/// Exact value for binary x.
double binary_value(const PseudoBoolean& f, const std::vector<double>& x);

struct RoofDualSolution {
  std::vector<double> values;  // each in {0, 0.5, 1}
  double objective = 0.0;      // LP optimum = relaxed_value(values)
  double bound = 0.0;          // same optimum, read from the min-cut value
  std::size_t graph_vertices = 0;
  std::size_t graph_arcs = 0;
};

/// Roof-duality bound via one min-cut on the doubled (x, not-x) network.
/// Variables on which the two copies agree are persistent; the rest are 0.5.
RoofDualSolution solve_roof_dual(const PseudoBoolean& f);

}  // namespace scenectx
