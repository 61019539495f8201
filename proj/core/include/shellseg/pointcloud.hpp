#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace shellseg {

using Label = std::uint16_t;
using InstanceId = std::uint32_t;
using Rgb = std::array<std::uint8_t, 3>;
using Vec3 = Eigen::Vector3d;

// Marks points that carry no ground truth. Never a valid class index.
inline constexpr Label kIgnoreLabel = 0xFFFF;

// One scan. Optional per-point arrays are absent rather than zero-filled.
struct PointCloud {
  std::vector<Vec3> positions;
  std::optional<std::vector<Rgb>> colors;
  std::optional<std::vector<float>> intensity;
  std::optional<std::vector<Label>> labels;
  std::optional<std::vector<InstanceId>> instances;
  std::string scene_id;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  bool operator==(const PointCloud&) const = default;
};

// Throws InvalidArgument when array lengths disagree or a position is not
// finite. When num_classes is given, labels must be < num_classes or ignore.
void validate(const PointCloud& pc,
              std::optional<std::size_t> num_classes = std::nullopt);

// Copies the points at `indices` (in that order) into a new cloud, keeping
// every present per-point array aligned.
PointCloud select(const PointCloud& pc, std::span<const std::uint32_t> indices);

}  // namespace shellseg
