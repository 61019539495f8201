#include "shellseg/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shellseg/error.hpp"
#include "shellseg/kdtree.hpp"
#include "shellseg/rng.hpp"

namespace shellseg {

namespace {

// Source indices grouped by voxel, groups in ascending key order, members
// ascending within a group.
struct VoxelGroups {
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> offsets;
};

VoxelGroups group_by_voxel(std::span<const Vec3> positions, double voxel_size) {
  const auto keys = voxel_keys(positions, voxel_size);
  VoxelGroups g;
  g.order.resize(positions.size());
  std::iota(g.order.begin(), g.order.end(), 0u);
  std::sort(g.order.begin(), g.order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return keys[a] < keys[b] || (keys[a] == keys[b] && a < b);
  });
  g.offsets.push_back(0);
  for (std::uint32_t i = 1; i < g.order.size(); ++i) {
    if (keys[g.order[i]] != keys[g.order[i - 1]]) g.offsets.push_back(i);
  }
  if (!positions.empty()) g.offsets.push_back(static_cast<std::uint32_t>(positions.size()));
  return g;
}

bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

}  // namespace

std::vector<VoxelKey> voxel_keys(std::span<const Vec3> positions, double voxel_size) {
  if (!(voxel_size > 0)) throw InvalidArgument("voxel size must be > 0");
  std::vector<VoxelKey> keys(positions.size());
  if (positions.empty()) return keys;
  Vec3 lo = positions[0];
  for (const auto& p : positions) lo = lo.cwiseMin(p);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      keys[i][a] = static_cast<std::int64_t>(std::floor((positions[i][a] - lo[a]) / voxel_size));
    }
  }
  return keys;
}

SampleIndex voxel_grid_sample(std::span<const Vec3> positions, double voxel_size,
                              std::uint64_t seed) {
  const auto g = group_by_voxel(positions, voxel_size);
  Rng rng(seed);
  SampleIndex out;
  std::vector<std::uint32_t> rep_of_group;
  rep_of_group.reserve(g.offsets.size());
  for (std::size_t v = 0; v + 1 < g.offsets.size(); ++v) {
    const auto size = g.offsets[v + 1] - g.offsets[v];
    rep_of_group.push_back(g.order[g.offsets[v] + uniform_index(rng, size)]);
  }
  out.kept = rep_of_group;
  std::sort(out.kept.begin(), out.kept.end());
  out.inverse.resize(positions.size());
  for (std::size_t v = 0; v + 1 < g.offsets.size(); ++v) {
    const auto rank = static_cast<std::uint32_t>(
        std::lower_bound(out.kept.begin(), out.kept.end(), rep_of_group[v]) - out.kept.begin());
    for (auto i = g.offsets[v]; i < g.offsets[v + 1]; ++i) out.inverse[g.order[i]] = rank;
  }
  return out;
}

std::vector<std::uint32_t> sphere_crop_at(std::span<const Vec3> positions, std::size_t max_points,
                                          std::uint32_t center) {
  if (max_points == 0) throw InvalidArgument("sphere_crop: max_points must be > 0");
  std::vector<std::uint32_t> idx(positions.size());
  std::iota(idx.begin(), idx.end(), 0u);
  if (positions.size() <= max_points) return idx;
  if (center >= positions.size()) throw InvalidArgument("sphere_crop: center out of range");
  std::vector<double> d2(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    d2[i] = squared_distance(positions[i], positions[center]);
  }
  auto closer = [&](std::uint32_t a, std::uint32_t b) {
    return d2[a] < d2[b] || (d2[a] == d2[b] && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(max_points), idx.end(), closer);
  idx.resize(max_points);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::uint32_t> sphere_crop(std::span<const Vec3> positions, std::size_t max_points,
                                       std::uint64_t seed) {
  if (max_points == 0) throw InvalidArgument("sphere_crop: max_points must be > 0");
  if (positions.size() <= max_points) return sphere_crop_at(positions, max_points, 0);
  Rng rng(seed);
  const auto center = static_cast<std::uint32_t>(uniform_index(rng, positions.size()));
  return sphere_crop_at(positions, max_points, center);
}

std::vector<Fragment> fragment_partition(std::span<const Vec3> positions, double voxel_size,
                                         std::uint64_t seed) {
  auto g = group_by_voxel(positions, voxel_size);
  Rng rng(seed);
  std::vector<Fragment> fragments;
  for (std::size_t v = 0; v + 1 < g.offsets.size(); ++v) {
    auto first = g.order.begin() + g.offsets[v];
    auto last = g.order.begin() + g.offsets[v + 1];
    shuffle(first, last, rng);
    const auto size = static_cast<std::size_t>(last - first);
    while (fragments.size() < size) {
      fragments.push_back(Fragment{{}, static_cast<std::uint32_t>(fragments.size())});
    }
    for (std::size_t r = 0; r < size; ++r) fragments[r].indices.push_back(first[r]);
  }
  for (auto& f : fragments) std::sort(f.indices.begin(), f.indices.end());
  return fragments;
}

std::vector<std::vector<std::uint32_t>> split_by_median(std::span<const Vec3> positions,
                                                        std::vector<std::uint32_t> indices,
                                                        std::size_t budget) {
  if (budget == 0) throw InvalidArgument("split_by_median: budget must be > 0");
  std::vector<std::vector<std::uint32_t>> done;
  std::vector<std::vector<std::uint32_t>> todo;
  todo.push_back(std::move(indices));
  while (!todo.empty()) {
    auto part = std::move(todo.back());
    todo.pop_back();
    if (part.size() <= budget) {
      std::sort(part.begin(), part.end());
      done.push_back(std::move(part));
      continue;
    }
    Vec3 lo = positions[part[0]], hi = lo;
    for (auto i : part) {
      lo = lo.cwiseMin(positions[i]);
      hi = hi.cwiseMax(positions[i]);
    }
    Eigen::Index axis = 0;
    (hi - lo).maxCoeff(&axis);
    const auto mid = part.begin() + static_cast<std::ptrdiff_t>(part.size() / 2);
    std::nth_element(part.begin(), mid, part.end(), [&](std::uint32_t a, std::uint32_t b) {
      return positions[a][axis] < positions[b][axis] ||
             (positions[a][axis] == positions[b][axis] && a < b);
    });
    std::vector<std::uint32_t> right(mid, part.end());
    part.erase(mid, part.end());
    // Pushed in reverse so parts come out in spatial order.
    todo.push_back(std::move(right));
    todo.push_back(std::move(part));
  }
  return done;
}

NeighborTable knn(std::span<const Vec3> positions, std::span<const Vec3> queries, std::size_t k) {
  if (positions.empty()) throw InvalidArgument("knn: empty candidate set");
  if (k == 0 || k > positions.size()) {
    throw InvalidArgument("knn: k=" + std::to_string(k) + " exceeds " +
                          std::to_string(positions.size()) + " candidates");
  }
  const KdTree tree(positions);
  NeighborTable t;
  t.k = k;
  t.indices.reserve(queries.size() * k);
  for (const auto& q : queries) tree.query(q, k, KdTree::npos, t.indices);
  return t;
}

NeighborTable knn_self(std::span<const Vec3> positions, std::size_t k, bool include_self) {
  if (positions.empty()) throw InvalidArgument("knn: empty candidate set");
  const std::size_t available = include_self ? positions.size() : positions.size() - 1;
  if (k == 0 || k > available) {
    throw InvalidArgument("knn: k=" + std::to_string(k) + " exceeds " + std::to_string(available) +
                          " candidates");
  }
  const KdTree tree(positions);
  NeighborTable t;
  t.k = k;
  t.indices.reserve(positions.size() * k);
  for (std::uint32_t i = 0; i < positions.size(); ++i) {
    tree.query(positions[i], k, include_self ? KdTree::npos : i, t.indices);
  }
  return t;
}

GridPooling grid_pool(std::span<const Vec3> positions, double voxel_size) {
  const auto g = group_by_voxel(positions, voxel_size);
  const std::size_t nclusters = g.offsets.empty() ? 0 : g.offsets.size() - 1;
  // Groups are in key order; renumber by lowest member index.
  std::vector<std::uint32_t> group_order(nclusters);
  std::iota(group_order.begin(), group_order.end(), 0u);
  std::sort(group_order.begin(), group_order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return g.order[g.offsets[a]] < g.order[g.offsets[b]];
  });

  GridPooling out;
  out.parent.resize(positions.size());
  out.offsets.reserve(nclusters + 1);
  out.members.reserve(positions.size());
  out.centers.reserve(nclusters);
  out.offsets.push_back(0);
  for (std::uint32_t c = 0; c < nclusters; ++c) {
    const auto v = group_order[c];
    const auto begin = out.members.size();
    for (auto i = g.offsets[v]; i < g.offsets[v + 1]; ++i) {
      out.members.push_back(g.order[i]);
      out.parent[g.order[i]] = c;
    }
    std::sort(out.members.begin() + static_cast<std::ptrdiff_t>(begin), out.members.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                return lex_less(positions[a], positions[b]) ||
                       (positions[a] == positions[b] && a < b);
              });
    Vec3 sum = Vec3::Zero();
    for (auto m = begin; m < out.members.size(); ++m) sum += positions[out.members[m]];
    out.centers.push_back(sum / static_cast<double>(out.members.size() - begin));
    out.offsets.push_back(static_cast<std::uint32_t>(out.members.size()));
  }
  return out;
}

}  // namespace shellseg
