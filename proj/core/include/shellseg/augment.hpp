#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "shellseg/pointcloud.hpp"

namespace shellseg {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct GeometricAugment {
  bool center_shift = true;
  double dropout_p = 0.5;
  double dropout_ratio = 0.2;
  bool rotate_z = true;                           // yaw uniform in [-pi, pi]
  double rotate_xy_max = std::numbers::pi / 64;   // radians, each of x and y
  std::array<double, 3> flip_p{0.5, 0.5, 0.0};
  double jitter_sigma = 0.005;  // meters
  double jitter_clip = 0.02;    // meters
};

struct ChromaticAugment {
  double auto_contrast_p = 0.2;
  // Fixed blend factor; random in [0, 1) when unset.
  std::optional<double> auto_contrast_blend;
  double translate_p = 0.95;
  double translate_ratio = 0.05;
  double jitter_p = 0.95;
  double jitter_sigma = 0.05 * 255.0;
  bool normalize = true;
};

struct AugmentConfig {
  GeometricAugment geometric;
  ChromaticAugment chromatic;

  // Everything off: geometric and chromatic passes become identities
  // (normalization stays as configured).
  static AugmentConfig none();
};

void validate(const AugmentConfig& cfg);

// Center shift, dropout, rotation, flips and jitter, in that order.
PointCloud apply_geometric(const PointCloud& pc, const GeometricAugment& cfg, std::uint64_t seed);

// Auto contrast, translation, jitter, then normalization of 0..255 to
// [-1, 1]. Returns an N x 3 feature matrix; positions are not touched.
FeatureMatrix apply_chromatic(const PointCloud& pc, const ChromaticAugment& cfg, std::uint64_t seed);

// Colors mapped from 0..255 to [-1, 1] with no augmentation.
FeatureMatrix normalized_colors(const PointCloud& pc);

// Network input for `pc`: normalized colors for 3 channels, a constant 1
// column for 1 channel. Anything else throws InvalidArgument.
FeatureMatrix model_features(const PointCloud& pc, std::size_t channels);

struct TtaConfig {
  std::vector<double> yaw_angles{0.0, std::numbers::pi / 2, std::numbers::pi,
                                 3 * std::numbers::pi / 2};
  bool mirror_x = true;

  static TtaConfig identity() { return TtaConfig{{0.0}, false}; }
};

struct TtaInstance {
  PointCloud cloud;
  std::uint32_t transform_id = 0;
  double yaw = 0.0;
  bool mirrored = false;
};

// One instance per (yaw, mirror) pair; identity comes first. Rotations are
// about the z axis through the origin. Point order and count are kept.
std::vector<TtaInstance> tta_instances(const PointCloud& pc, const TtaConfig& cfg);

}  // namespace shellseg
