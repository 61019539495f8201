#include "shellseg/pointcloud.hpp"

#include <cmath>

#include "shellseg/error.hpp"

namespace shellseg {

namespace {

template <typename T>
void check_length(const std::optional<std::vector<T>>& column, std::size_t n,
                  const char* name) {
  if (column && column->size() != n) {
    throw InvalidArgument(std::string("point cloud column '") + name + "' has " +
                          std::to_string(column->size()) + " entries, expected " +
                          std::to_string(n));
  }
}

template <typename T>
std::optional<std::vector<T>> gather(const std::optional<std::vector<T>>& column,
                                     std::span<const std::uint32_t> indices) {
  if (!column) return std::nullopt;
  std::vector<T> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back((*column)[i]);
  return out;
}

}  // namespace

void validate(const PointCloud& pc, std::optional<std::size_t> num_classes) {
  const auto n = pc.positions.size();
  check_length(pc.colors, n, "colors");
  check_length(pc.intensity, n, "intensity");
  check_length(pc.labels, n, "labels");
  check_length(pc.instances, n, "instances");
  for (std::size_t i = 0; i < n; ++i) {
    if (!pc.positions[i].allFinite()) {
      throw InvalidArgument("non-finite position at point " + std::to_string(i));
    }
  }
  if (num_classes && pc.labels) {
    for (std::size_t i = 0; i < n; ++i) {
      const Label l = (*pc.labels)[i];
      if (l != kIgnoreLabel && l >= *num_classes) {
        throw InvalidArgument("label " + std::to_string(l) + " at point " +
                              std::to_string(i) + " outside label space of " +
                              std::to_string(*num_classes) + " classes");
      }
    }
  }
}

PointCloud select(const PointCloud& pc, std::span<const std::uint32_t> indices) {
  PointCloud out;
  out.scene_id = pc.scene_id;
  out.positions.reserve(indices.size());
  for (auto i : indices) {
    if (i >= pc.size()) throw InvalidArgument("select: index out of range");
    out.positions.push_back(pc.positions[i]);
  }
  out.colors = gather(pc.colors, indices);
  out.intensity = gather(pc.intensity, indices);
  out.labels = gather(pc.labels, indices);
  out.instances = gather(pc.instances, indices);
  return out;
}

}  // namespace shellseg
