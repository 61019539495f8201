#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shellseg/pointcloud.hpp"

namespace shellseg {

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

// Exact k-nearest-neighbour index over a copy of a point set. Neighbours are
// ordered by (squared distance, index), so equal distances resolve to the
// lower index. Read-only after construction.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  std::size_t size() const { return points_.size(); }

  // Appends the k nearest points to `query` to `out`, nearest first.
  // `exclude` names one index to skip (pass npos for none).
  void query(const Vec3& query, std::size_t k, std::uint32_t exclude,
             std::vector<std::uint32_t>& out) const;

  static constexpr std::uint32_t npos = 0xFFFFFFFFu;

 private:
  struct Node {
    std::uint32_t begin, end;   // range into order_
    std::int32_t left = -1, right = -1;
    std::uint8_t axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace shellseg
