#include "shellseg/kdtree.hpp"

#include <algorithm>
#include <queue>

#include "shellseg/error.hpp"

namespace shellseg {

namespace {

constexpr std::uint32_t kLeafSize = 12;

struct Candidate {
  double d2;
  std::uint32_t index;
  bool operator<(const Candidate& o) const {
    return d2 < o.d2 || (d2 == o.d2 && index < o.index);
  }
};

class Searcher {
 public:
  Searcher(std::size_t k, std::uint32_t exclude) : k_(k), exclude_(exclude) { heap_.reserve(k + 1); }

  void offer(double d2, std::uint32_t index) {
    if (index == exclude_) return;
    const Candidate c{d2, index};
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  bool full() const { return heap_.size() == k_; }
  double worst() const { return heap_.front().d2; }

  void drain(std::vector<std::uint32_t>& out) {
    std::sort_heap(heap_.begin(), heap_.end());
    for (const auto& c : heap_) out.push_back(c.index);
  }

 private:
  std::size_t k_;
  std::uint32_t exclude_;
  std::vector<Candidate> heap_;
};

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.size() >= npos) throw InvalidArgument("KdTree: too many points");
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]], hi = lo;
  for (auto i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  Eigen::Index axis = 0;
  (hi - lo).maxCoeff(&axis);
  const auto mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  auto& node = nodes_[id];
  node.axis = static_cast<std::uint8_t>(axis);
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void KdTree::query(const Vec3& q, std::size_t k, std::uint32_t exclude,
                   std::vector<std::uint32_t>& out) const {
  if (k == 0 || nodes_.empty()) return;
  Searcher s(k, exclude);
  // Explicit stack of (node, lower bound on squared distance).
  std::vector<std::pair<std::int32_t, double>> stack;
  stack.emplace_back(0, 0.0);
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (s.full() && bound > s.worst()) continue;
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (auto i = node.begin; i < node.end; ++i) {
        const auto idx = order_[i];
        s.offer(squared_distance(points_[idx], q), idx);
      }
      continue;
    }
    const double diff = q[node.axis] - node.split;
    const auto near = diff < 0 ? node.left : node.right;
    const auto far = diff < 0 ? node.right : node.left;
    // Far side first on the stack so the near side is searched first.
    stack.emplace_back(far, std::max(bound, diff * diff));
    stack.emplace_back(near, bound);
  }
  s.drain(out);
}

}  // namespace shellseg
