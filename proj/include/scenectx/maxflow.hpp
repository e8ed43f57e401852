#pragma once

#include <cstddef>
#include <vector>

namespace scenectx {

/// Dinic max-flow over double capacities. After max_flow(), source_side()
/// reports the minimal source set (vertices reachable in the residual graph).
class MaxFlow {
 public:
  explicit MaxFlow(int vertices = 0);

  int add_vertex();
  int vertices() const { return static_cast<int>(adjacency_.size()); }
  std::size_t arcs() const { return to_.size(); }

  /// Directed arc u -> v; returns its id, or -1 when the capacity is not positive.
  int add_arc(int u, int v, double capacity);

  double flow(int arc) const { return residual_[static_cast<std::size_t>(arc ^ 1)]; }
  /// Overrides the flow on an arc (0 <= f <= capacity); conservation is the caller's job.
  void set_flow(int arc, double f);

  double max_flow(int source, int sink);
  bool source_side(int v) const { return reachable_[static_cast<std::size_t>(v)]; }

  /// Successor lists of the residual graph (arcs with residual above the tolerance).
  std::vector<std::vector<int>> residual_adjacency() const;

 private:
  bool bfs(int source, int sink);
  double dfs(int u, int sink, double pushed);

  std::vector<std::vector<int>> adjacency_;
  std::vector<int> to_;
  std::vector<double> residual_;
  std::vector<int> level_;
  std::vector<std::size_t> cursor_;
  std::vector<bool> reachable_;
  double max_capacity_ = 0.0;
  double epsilon_ = 0.0;
};

}  // namespace scenectx
