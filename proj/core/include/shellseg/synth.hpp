#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Geometry>

#include "shellseg/io.hpp"
#include "shellseg/labelspace.hpp"
#include "shellseg/manifest.hpp"
#include "shellseg/pointcloud.hpp"

namespace shellseg {

struct Interval {
  double lo = 0.0, hi = 0.0;
};

struct CountInterval {
  std::size_t lo = 0, hi = 0;
};

// Classes are shell11 indices.
struct SceneSpec {
  Interval length{6.0, 10.0};  // along x, meters
  Interval width{4.0, 8.0};    // along y
  Interval height{2.8, 3.4};   // floor to ceiling

  CountInterval doors{1, 2};
  CountInterval windows{1, 3};
  CountInterval beams{0, 2};  // ceiling beams spanning the room
  CountInterval columns{0, 0};
  CountInterval stairs{0, 1};
  CountInterval installations{1, 3};
  CountInterval equipment{1, 2};
  CountInterval clutter{2, 5};

  Interval door_width{0.8, 1.0};
  Interval door_height{2.0, 2.15};
  Interval window_width{0.8, 1.6};
  Interval window_height{1.0, 1.4};
  Interval window_sill{0.8, 1.0};
  double lintel_height = 0.25;
  double lintel_depth = 0.25;

  double density = 250.0;  // points per square meter of surface
  std::array<Rgb, 11> palette{{{235, 235, 225},   // ceiling
                               {120, 110, 100},   // floor
                               {185, 180, 170},   // wall
                               {150, 120, 95},    // beam
                               {110, 110, 130},   // column
                               {80, 150, 210},    // window
                               {160, 70, 50},     // door
                               {200, 160, 60},    // stairs
                               {60, 130, 70},     // equipment
                               {210, 90, 170},    // installation
                               {90, 60, 120}}};  // none (clutter)
  double color_noise = 10.0;  // Gaussian sigma per channel, 0..255 scale
};

void validate(const SceneSpec& spec);

// Counts tuned so ceiling, floor and wall hold about 94.3% of all points.
SceneSpec shell_share_preset();

// A sampled surface patch (degenerate box) or solid box that produced points.
struct Primitive {
  Label label = 0;
  InstanceId instance = 0;
  Eigen::AlignedBox3d box;
};

struct GeneratedScene {
  PointCloud cloud;
  std::vector<Primitive> primitives;
  std::vector<std::uint32_t> primitive_of;  // per point
};

// Axis-aligned room with the floor at z = 0, centered on the origin in x and
// y. Surfaces are sampled on jittered grids: a patch of area A yields exactly
// round(A * density) candidates, minus those falling inside wall openings.
// Throws InvalidArgument when an opening cannot fit its wall.
GeneratedScene generate_scene_detailed(const SceneSpec& spec, std::uint64_t seed);
PointCloud generate_scene(const SceneSpec& spec, std::uint64_t seed);

// Exactly `count` points on the parallelogram origin + s*u + t*v, s,t in [0,1].
std::vector<Vec3> sample_patch(const Vec3& origin, const Vec3& u, const Vec3& v, std::size_t count,
                               std::uint64_t seed);

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
};

// Minor splits get ceil(ratio * n), trimmed so the largest split keeps at
// least one scene; the largest split takes the rest.
SplitCounts split_counts(std::size_t n, const std::array<double, 3>& ratios);

struct DatasetOptions {
  std::array<double, 3> split{0.70, 0.15, 0.15};
  std::string label_space = "shell11";  // labels are translated from shell11
  CloudFormat format = CloudFormat::kPlyBinaryLe;
};

// Writes n scenes plus manifest.txt into `dir` and returns the manifest.
DatasetManifest generate_dataset(const SceneSpec& spec, std::size_t n_scenes, std::uint64_t seed,
                                 const std::filesystem::path& dir, const DatasetOptions& options = {});

// Scene i of a dataset generated with `seed`, relabeled into `label_space`.
PointCloud dataset_scene(const SceneSpec& spec, std::uint64_t seed, std::size_t index,
                         const LabelSpace& label_space);

}  // namespace shellseg
