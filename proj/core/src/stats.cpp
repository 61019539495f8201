#include "shellseg/stats.hpp"

#include <cmath>
#include <set>

#include "shellseg/error.hpp"
#include "shellseg/io.hpp"
#include "shellseg/kdtree.hpp"

namespace shellseg {

namespace {

std::pair<double, double> mean_and_population_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

}  // namespace

PointCloud distance_filter(const PointCloud& pc, double max_range) {
  if (!(max_range > 0)) throw InvalidArgument("distance_filter: max_range must be > 0");
  std::vector<std::uint32_t> keep;
  keep.reserve(pc.size());
  const double r2 = max_range * max_range;
  for (std::uint32_t i = 0; i < pc.size(); ++i) {
    if (pc.positions[i].squaredNorm() <= r2) keep.push_back(i);
  }
  return select(pc, keep);
}

DensityStats neighborhood_density(const PointCloud& pc, std::size_t k) {
  if (k == 0) throw InvalidArgument("neighborhood_density: k must be >= 1");
  if (pc.size() <= k) {
    throw InvalidArgument("neighborhood_density: need more than k=" + std::to_string(k) +
                          " points, got " + std::to_string(pc.size()));
  }
  const KdTree tree(pc.positions);
  std::vector<double> per_point(pc.size());
  std::vector<std::uint32_t> nbrs;
  for (std::uint32_t i = 0; i < pc.size(); ++i) {
    nbrs.clear();
    tree.query(pc.positions[i], k, i, nbrs);
    double sum = 0.0;
    for (auto j : nbrs) sum += std::sqrt(squared_distance(pc.positions[i], pc.positions[j]));
    per_point[i] = sum / static_cast<double>(k);
  }
  const auto [mean, sd] = mean_and_population_std(per_point);
  return {mean, sd};
}

ClassStats class_statistics(std::span<const PointCloud> scenes, std::size_t num_classes) {
  if (num_classes == 0) throw InvalidArgument("class_statistics: empty label space");
  ClassStats out;
  out.num_scenes = scenes.size();
  bool all_instances = !scenes.empty();
  for (const auto& pc : scenes) {
    if (!pc.labels) throw InvalidArgument("class_statistics: scene '" + pc.scene_id + "' has no labels");
    validate(pc, num_classes);
    all_instances = all_instances && pc.instances.has_value();
  }

  std::vector<std::vector<double>> points(num_classes), instances(num_classes);
  std::vector<std::uint64_t> totals(num_classes, 0);
  std::uint64_t ignored = 0, grand_total = 0;
  for (const auto& pc : scenes) {
    std::vector<std::uint64_t> counts(num_classes, 0);
    std::vector<std::set<InstanceId>> ids(num_classes);
    for (std::size_t i = 0; i < pc.size(); ++i) {
      const Label l = (*pc.labels)[i];
      ++grand_total;
      if (l == kIgnoreLabel) {
        ++ignored;
        continue;
      }
      ++counts[l];
      if (all_instances) ids[l].insert((*pc.instances)[i]);
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
      points[c].push_back(static_cast<double>(counts[c]));
      totals[c] += counts[c];
      if (all_instances) instances[c].push_back(static_cast<double>(ids[c].size()));
    }
  }

  out.points_mean.resize(num_classes);
  out.points_std.resize(num_classes);
  out.point_share.resize(num_classes, 0.0);
  if (all_instances) {
    out.instances_mean.resize(num_classes);
    out.instances_std.resize(num_classes);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::tie(out.points_mean[c], out.points_std[c]) = mean_and_population_std(points[c]);
    if (all_instances) {
      std::tie(out.instances_mean[c], out.instances_std[c]) = mean_and_population_std(instances[c]);
    }
    if (grand_total > 0) {
      out.point_share[c] = static_cast<double>(totals[c]) / static_cast<double>(grand_total);
    }
  }
  if (grand_total > 0) {
    out.ignore_share = static_cast<double>(ignored) / static_cast<double>(grand_total);
  }
  return out;
}

ClassStats class_statistics(const DatasetManifest& manifest, std::size_t num_classes) {
  std::vector<PointCloud> scenes;
  scenes.reserve(manifest.scenes.size());
  for (const auto& entry : manifest.scenes) scenes.push_back(load_pointcloud(manifest.resolve(entry)));
  return class_statistics(scenes, num_classes);
}

}  // namespace shellseg
