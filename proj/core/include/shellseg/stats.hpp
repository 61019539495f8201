#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "shellseg/manifest.hpp"
#include "shellseg/pointcloud.hpp"

namespace shellseg {

// Keeps points whose distance from the origin is <= max_range.
PointCloud distance_filter(const PointCloud& pc, double max_range);

struct DensityStats {
  double mean = 0.0;  // meters
  double std = 0.0;   // population standard deviation, meters
};

// Mean over points of the mean distance to their k nearest neighbours
// (self excluded), with its standard deviation.
DensityStats neighborhood_density(const PointCloud& pc, std::size_t k);

struct ClassStats {
  std::vector<double> points_mean, points_std;  // points per scene, per class
  // Instances per scene, per class. Empty when the scenes carry no instances.
  std::vector<double> instances_mean, instances_std;
  std::vector<double> point_share;  // fraction of all points, per class
  double ignore_share = 0.0;        // fraction of points with the ignore label
  std::size_t num_scenes = 0;

  bool has_instances() const { return !instances_mean.empty(); }
};

// Per-class statistics across scenes. Standard deviations are population
// (divide by n). Instance statistics are computed when every scene has
// instance ids.
ClassStats class_statistics(std::span<const PointCloud> scenes, std::size_t num_classes);
ClassStats class_statistics(const DatasetManifest& manifest, std::size_t num_classes);

}  // namespace shellseg
