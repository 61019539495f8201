#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "shellseg/pointcloud.hpp"

namespace shellseg {

using VoxelKey = std::array<std::int64_t, 3>;

// Integer voxel coordinates of every point, anchored at the per-axis minimum
// of the set: floor((p - min) / voxel_size).
std::vector<VoxelKey> voxel_keys(std::span<const Vec3> positions, double voxel_size);

struct SampleIndex {
  std::vector<std::uint32_t> kept;     // source indices, ascending
  std::vector<std::uint32_t> inverse;  // per source point: position in `kept`
};

// One uniformly chosen representative per occupied voxel.
SampleIndex voxel_grid_sample(std::span<const Vec3> positions, double voxel_size,
                              std::uint64_t seed);

// All indices when the cloud fits the budget; otherwise the max_points
// points nearest to a random center point. Result is ascending.
std::vector<std::uint32_t> sphere_crop(std::span<const Vec3> positions, std::size_t max_points,
                                       std::uint64_t seed);
std::vector<std::uint32_t> sphere_crop_at(std::span<const Vec3> positions, std::size_t max_points,
                                          std::uint32_t center);

struct Fragment {
  std::vector<std::uint32_t> indices;  // ascending
  std::uint32_t rank = 0;
};

// Fragment r holds every point with within-voxel rank r, ranks being a
// seeded random permutation inside each voxel. The fragments partition the
// index set and their count equals the maximum voxel occupancy.
std::vector<Fragment> fragment_partition(std::span<const Vec3> positions, double voxel_size,
                                         std::uint64_t seed);

// Recursively halves `indices` at the median of the longest bounding-box
// axis until every part holds at most `budget` points.
std::vector<std::vector<std::uint32_t>> split_by_median(std::span<const Vec3> positions,
                                                        std::vector<std::uint32_t> indices,
                                                        std::size_t budget);

// Row-major neighbour table: row q lists the k neighbours of query q,
// nearest first, ties to the lower index.
struct NeighborTable {
  std::size_t k = 0;
  std::vector<std::uint32_t> indices;

  std::size_t rows() const { return k == 0 ? 0 : indices.size() / k; }
  std::span<const std::uint32_t> row(std::size_t q) const { return {indices.data() + q * k, k}; }
};

NeighborTable knn(std::span<const Vec3> positions, std::span<const Vec3> queries, std::size_t k);

// Queries are the positions themselves. With include_self false a point
// never lists itself.
NeighborTable knn_self(std::span<const Vec3> positions, std::size_t k, bool include_self);

// Mean-pools a point set onto a voxel grid. `parent[i]` names the cluster of
// point i; clusters are numbered in order of their lowest member index.
// Members of a cluster are listed in lexicographic position order, so sums
// over them do not depend on the input ordering.
struct GridPooling {
  std::vector<std::uint32_t> parent;
  std::vector<std::uint32_t> offsets;  // CSR: cluster c owns members[offsets[c]..offsets[c+1])
  std::vector<std::uint32_t> members;
  std::vector<Vec3> centers;  // mean position per cluster

  std::size_t clusters() const { return centers.size(); }
  std::uint32_t cluster_size(std::size_t c) const { return offsets[c + 1] - offsets[c]; }
};

GridPooling grid_pool(std::span<const Vec3> positions, double voxel_size);

}  // namespace shellseg
