#include "scenectx/roof_dual.hpp"

#include "scenectx/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

namespace scenectx {

double relaxed_value(const PseudoBoolean& f, const std::vector<double>& x) {
  double total = f.constant;
  for (int v = 0; v < f.variables; ++v) total += f.linear[static_cast<std::size_t>(v)] * x[static_cast<std::size_t>(v)];
  for (const auto& p : f.pairs) {
    const double a = x[static_cast<std::size_t>(p.u)], b = x[static_cast<std::size_t>(p.v)];
    const double z = p.coefficient >= 0 ? std::min(a, b) : std::max(0.0, a + b - 1.0);
    total += p.coefficient * z;
  }
  return total;
}

double binary_value(const PseudoBoolean& f, const std::vector<double>& x) {
  double total = f.constant;
  for (int v = 0; v < f.variables; ++v) total += f.linear[static_cast<std::size_t>(v)] * x[static_cast<std::size_t>(v)];
  for (const auto& p : f.pairs) total += p.coefficient * x[static_cast<std::size_t>(p.u)] * x[static_cast<std::size_t>(p.v)];
  return total;
}

namespace {

std::vector<bool> reach(const std::vector<std::vector<int>>& adjacency, int start) {
  std::vector<bool> seen(adjacency.size(), false);
  std::vector<int> stack{start};
  seen[static_cast<std::size_t>(start)] = true;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adjacency[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

/// Strongly connected components in reverse topological order (Tarjan, iterative).
std::vector<std::vector<int>> components(const std::vector<std::vector<int>>& adjacency) {
  const int count = static_cast<int>(adjacency.size());
  std::vector<int> index(static_cast<std::size_t>(count), -1), low(static_cast<std::size_t>(count), 0);
  std::vector<bool> on_stack(static_cast<std::size_t>(count), false);
  std::vector<int> stack;
  std::vector<std::vector<int>> out;
  std::vector<std::pair<int, std::size_t>> call;
  int next = 0;
  for (int root = 0; root < count; ++root) {
    if (index[static_cast<std::size_t>(root)] >= 0) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      auto& [u, child] = call.back();
      const auto uu = static_cast<std::size_t>(u);
      if (child == 0) {
        index[uu] = low[uu] = next++;
        stack.push_back(u);
        on_stack[uu] = true;
      }
      if (child < adjacency[uu].size()) {
        const int v = adjacency[uu][child++];
        const auto vv = static_cast<std::size_t>(v);
        if (index[vv] < 0) {
          call.emplace_back(v, 0);
        } else if (on_stack[vv]) {
          low[uu] = std::min(low[uu], index[vv]);
        }
        continue;
      }
      if (low[uu] == index[uu]) {
        std::vector<int> component;
        int w = -1;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>(w)] = false;
          component.push_back(w);
        } while (w != u);
        out.push_back(std::move(component));
      }
      const int finished = u;
      call.pop_back();
      if (!call.empty()) {
        const auto parent = static_cast<std::size_t>(call.back().first);
        low[parent] = std::min(low[parent], low[static_cast<std::size_t>(finished)]);
      }
    }
  }
  return out;
}

/// A minimum cut (source set closed in the residual graph) that separates
/// as many x/not-x copies as possible, so undetermined variables get
/// integral values whenever some optimal cut allows it.
std::vector<bool> choose_cut(const std::vector<std::vector<int>>& residual, int source, int sink, int n) {
  const auto from_source = reach(residual, source);
  std::vector<std::vector<int>> reversed(residual.size());
  for (std::size_t u = 0; u < residual.size(); ++u) {
    for (int v : residual[u]) reversed[static_cast<std::size_t>(v)].push_back(static_cast<int>(u));
  }
  const auto to_sink = reach(reversed, sink);
  if (from_source[static_cast<std::size_t>(sink)]) return from_source;

  auto mirror = [n, source, sink](int v) {
    if (v == source) return sink;
    if (v == sink) return source;
    return v < n ? v + n : v - n;
  };
  const auto comps = components(residual);
  std::vector<int> comp_of(residual.size());
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (int v : comps[c]) comp_of[static_cast<std::size_t>(v)] = static_cast<int>(c);
  }
  enum Side : std::int8_t { Unset, Source, Sink };
  std::vector<Side> side(comps.size(), Unset);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const int rep = comps[c].front();
    if (from_source[static_cast<std::size_t>(rep)]) {
      side[c] = Source;
      continue;
    }
    if (to_sink[static_cast<std::size_t>(rep)]) {
      side[c] = Sink;
      continue;
    }
    bool forced_sink = false;
    for (int u : comps[c]) {
      for (int v : residual[static_cast<std::size_t>(u)]) {
        const auto d = static_cast<std::size_t>(comp_of[static_cast<std::size_t>(v)]);
        if (d != c && side[d] == Sink) forced_sink = true;
      }
    }
    const auto m = static_cast<std::size_t>(comp_of[static_cast<std::size_t>(mirror(rep))]);
    side[c] = forced_sink || (m != c && side[m] == Source) ? Sink : Source;
  }
  std::vector<bool> on_source(residual.size());
  for (std::size_t v = 0; v < residual.size(); ++v) on_source[v] = side[static_cast<std::size_t>(comp_of[v])] == Source;
  return on_source;
}

}  // namespace

RoofDualSolution solve_roof_dual(const PseudoBoolean& f) {
  // Minimize E = -f written as a posiform over literals x_v and not-x_v.
  // Every term is split in half between the x-copy and the complemented
  // copy y_v (y_v stands for not-x_v), which gives a submodular energy on
  // 2n variables. Vertex in the sink set means value 1; arcs are cut when
  // they run from the source set to the sink set.
  const int n = f.variables;
  const int source = 2 * n, sink = 2 * n + 1;
  MaxFlow graph(2 * n + 2);
  auto x = [](int v) { return v; };
  auto y = [n](int v) { return n + v; };
  // Arcs come in mirror pairs under x <-> y, source <-> sink, reversal.
  std::vector<std::pair<int, int>> mirrors;
  auto add_mirrored = [&](int u1, int v1, int u2, int v2, double capacity) {
    const int a = graph.add_arc(u1, v1, capacity);
    const int b = graph.add_arc(u2, v2, capacity);
    if (a >= 0 && b >= 0) mirrors.emplace_back(a, b);
  };

  std::vector<double> unary(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) unary[static_cast<std::size_t>(v)] = -f.linear[static_cast<std::size_t>(v)];
  double constant = -f.constant;

  for (const auto& p : f.pairs) {
    const double q = -p.coefficient;  // energy coefficient of x_u x_v
    if (q == 0.0 || p.u == p.v) {
      if (p.u == p.v) unary[static_cast<std::size_t>(p.u)] += q;  // x^2 = x
      continue;
    }
    if (q < 0) {
      // q x_u x_v = q x_u + |q| x_u (1 - x_v)
      unary[static_cast<std::size_t>(p.u)] += q;
      const double half = -0.5 * q;
      add_mirrored(x(p.v), x(p.u), y(p.u), y(p.v), half);  // x_u * not x_v, y_v * not y_u
    } else {
      // q x_u x_v -> (q/2) x_u not-y_v + (q/2) not-y_u x_v
      const double half = 0.5 * q;
      add_mirrored(y(p.v), x(p.u), y(p.u), x(p.v), half);
    }
  }
  for (int v = 0; v < n; ++v) {
    const double t = unary[static_cast<std::size_t>(v)];
    if (t > 0) {
      add_mirrored(source, x(v), y(v), sink, 0.5 * t);  // cost when x_v = 1 / y_v = 0
    } else if (t < 0) {
      constant += t;  // t x = t - t (1 - x)
      add_mirrored(x(v), sink, source, y(v), -0.5 * t);
    }
  }

  RoofDualSolution out;
  out.graph_vertices = static_cast<std::size_t>(graph.vertices());
  out.graph_arcs = graph.arcs();
  const double cut = graph.max_flow(source, sink);
  // Averaging with the mirrored flow gives a symmetric residual graph.
  for (const auto& [a, b] : mirrors) {
    const double mean = 0.5 * (graph.flow(a) + graph.flow(b));
    graph.set_flow(a, mean);
    graph.set_flow(b, mean);
  }
  const auto on_source = choose_cut(graph.residual_adjacency(), source, sink, n);
  out.values.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    const double xv = on_source[static_cast<std::size_t>(x(v))] ? 0.0 : 1.0;
    const double yv = on_source[static_cast<std::size_t>(y(v))] ? 0.0 : 1.0;
    out.values[static_cast<std::size_t>(v)] = 0.5 * (xv + 1.0 - yv);
  }
  out.objective = relaxed_value(f, out.values);
  out.bound = -(cut + constant);
  return out;
}

}  // namespace scenectx
