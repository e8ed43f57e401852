#include "scenectx/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace scenectx {

namespace {
constexpr std::size_t kLeafSize = 12;
}

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, points_.size());
  }
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]], hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<long>(begin), order_.begin() + static_cast<long>(mid),
                   order_.begin() + static_cast<long>(end), [&](std::size_t a, std::size_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::pair<std::size_t, double> KdTree::nearest(const Vec3& query) const {
  std::pair<std::size_t, double> best{npos, std::numeric_limits<double>::infinity()};
  if (nodes_.empty()) return best;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const double d2 = (points_[idx] - query).squaredNorm();
        if (d2 < best.second || (d2 == best.second && idx < best.first)) best = {idx, d2};
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const std::size_t near = diff < 0 ? node.left : node.right;
    const std::size_t far = diff < 0 ? node.right : node.left;
    if (diff * diff <= best.second) stack.push_back(far);
    stack.push_back(near);
  }
  return best;
}

std::vector<std::size_t> KdTree::radius_search(const Vec3& query, double radius) const {
  std::vector<std::size_t> out;
  if (nodes_.empty() || radius <= 0) return out;
  const double r2 = radius * radius;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        if ((points_[order_[i]] - query).squaredNorm() < r2) out.push_back(order_[i]);
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    if (diff < radius) stack.push_back(node.left);
    if (diff > -radius) stack.push_back(node.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> KdTree::knn(const Vec3& query, std::size_t k) const {
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry> heap;  // max-heap of the current k best
  if (nodes_.empty() || k == 0) return {};
  auto bound = [&] { return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().first; };
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const Entry e{(points_[order_[i]] - query).squaredNorm(), order_[i]};
        if (heap.size() < k) {
          heap.push(e);
        } else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const std::size_t near = diff < 0 ? node.left : node.right;
    const std::size_t far = diff < 0 ? node.right : node.left;
    if (diff * diff <= bound()) stack.push_back(far);
    stack.push_back(near);
  }
  std::vector<Entry> sorted;
  while (!heap.empty()) {
    sorted.push_back(heap.top());
    heap.pop();
  }
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> out;
  out.reserve(sorted.size());
  for (const auto& e : sorted) out.push_back(e.second);
  return out;
}

double min_distance(const std::vector<Vec3>& a, const KdTree& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : a) best = std::min(best, b.nearest(p).second);
  return std::sqrt(best);
}

}  // namespace scenectx
