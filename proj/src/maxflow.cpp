#include "scenectx/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace scenectx {

MaxFlow::MaxFlow(int vertices) : adjacency_(static_cast<std::size_t>(vertices)) {}

int MaxFlow::add_vertex() {
  adjacency_.emplace_back();
  return vertices() - 1;
}

int MaxFlow::add_arc(int u, int v, double capacity) {
  if (!(capacity > 0) || u == v) return -1;
  const int id = static_cast<int>(to_.size());
  adjacency_[static_cast<std::size_t>(u)].push_back(static_cast<int>(to_.size()));
  to_.push_back(v);
  residual_.push_back(capacity);
  adjacency_[static_cast<std::size_t>(v)].push_back(static_cast<int>(to_.size()));
  to_.push_back(u);
  residual_.push_back(0.0);
  max_capacity_ = std::max(max_capacity_, capacity);
  return id;
}

void MaxFlow::set_flow(int arc, double f) {
  const auto a = static_cast<std::size_t>(arc);
  const double capacity = residual_[a] + residual_[a ^ 1];
  residual_[a] = capacity - f;
  residual_[a ^ 1] = f;
}

std::vector<std::vector<int>> MaxFlow::residual_adjacency() const {
  std::vector<std::vector<int>> out(adjacency_.size());
  for (std::size_t u = 0; u < adjacency_.size(); ++u) {
    for (int a : adjacency_[u]) {
      if (residual_[static_cast<std::size_t>(a)] > epsilon_) out[u].push_back(to_[static_cast<std::size_t>(a)]);
    }
  }
  return out;
}

bool MaxFlow::bfs(int source, int sink) {
  std::fill(level_.begin(), level_.end(), -1);
  std::queue<int> queue;
  level_[static_cast<std::size_t>(source)] = 0;
  queue.push(source);
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop();
    for (int a : adjacency_[static_cast<std::size_t>(u)]) {
      const int v = to_[static_cast<std::size_t>(a)];
      if (level_[static_cast<std::size_t>(v)] < 0 && residual_[static_cast<std::size_t>(a)] > epsilon_) {
        level_[static_cast<std::size_t>(v)] = level_[static_cast<std::size_t>(u)] + 1;
        queue.push(v);
      }
    }
  }
  return level_[static_cast<std::size_t>(sink)] >= 0;
}

double MaxFlow::dfs(int u, int sink, double pushed) {
  if (u == sink) return pushed;
  auto& adj = adjacency_[static_cast<std::size_t>(u)];
  for (auto& i = cursor_[static_cast<std::size_t>(u)]; i < adj.size(); ++i) {
    const int a = adj[i];
    const int v = to_[static_cast<std::size_t>(a)];
    if (level_[static_cast<std::size_t>(v)] != level_[static_cast<std::size_t>(u)] + 1) continue;
    if (residual_[static_cast<std::size_t>(a)] <= epsilon_) continue;
    const double got = dfs(v, sink, std::min(pushed, residual_[static_cast<std::size_t>(a)]));
    if (got > 0) {
      residual_[static_cast<std::size_t>(a)] -= got;
      residual_[static_cast<std::size_t>(a ^ 1)] += got;
      return got;
    }
  }
  return 0.0;
}

double MaxFlow::max_flow(int source, int sink) {
  // Residuals below this are treated as saturated.
  epsilon_ = max_capacity_ * 1e-13;
  const auto n = adjacency_.size();
  level_.assign(n, -1);
  cursor_.assign(n, 0);
  double flow = 0.0;
  while (bfs(source, sink)) {
    std::fill(cursor_.begin(), cursor_.end(), 0);
    while (true) {
      const double pushed = dfs(source, sink, std::numeric_limits<double>::infinity());
      if (pushed <= 0) break;
      flow += pushed;
    }
  }
  reachable_.assign(n, false);
  for (std::size_t v = 0; v < n; ++v) reachable_[v] = level_[v] >= 0;
  return flow;
}

}  // namespace scenectx
