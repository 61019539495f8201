#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "shellseg/error.hpp"
#include "shellseg/io.hpp"
#include "shellseg/stats.hpp"
#include "test_util.hpp"

namespace shellseg {
namespace {

TEST(DistanceFilter, KeepsPointsWithinRange) {
  PointCloud pc;
  pc.positions = {Vec3(1.0, 0, 0), Vec3(0, 24.9, 0), Vec3(0, 0, 25.1)};
  pc.labels = std::vector<Label>{0, 1, 2};
  const auto out = distance_filter(pc, 25.0);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ((*out.labels)[1], 1);
}

TEST(DistanceFilter, BoundaryIsInclusive) {
  PointCloud pc;
  pc.positions = {Vec3(3, 4, 0)};
  EXPECT_EQ(distance_filter(pc, 5.0).size(), 1u);
}

TEST(DistanceFilter, OriginIsIdentity) {
  PointCloud pc;
  pc.positions.assign(4, Vec3::Zero());
  pc.colors = std::vector<Rgb>(4, Rgb{1, 2, 3});
  EXPECT_EQ(distance_filter(pc, 0.5), pc);
}

TEST(DistanceFilter, MatchesBruteForce) {
  const auto pc = testing::random_cloud(1000, 11, 4, 30.0);
  const auto out = distance_filter(pc, 25.0);
  std::vector<Vec3> expected;
  for (const auto& p : pc.positions) {
    if (std::sqrt(p.x() * p.x() + p.y() * p.y() + p.z() * p.z()) <= 25.0) expected.push_back(p);
  }
  EXPECT_EQ(out.positions, expected);
  EXPECT_EQ(out.labels->size(), expected.size());
  EXPECT_THROW(distance_filter(pc, 0.0), InvalidArgument);
}

TEST(Density, ThreePointsOnALine) {
  PointCloud pc;
  pc.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  const auto d = neighborhood_density(pc, 1);
  EXPECT_DOUBLE_EQ(d.mean, 1.0);
  EXPECT_DOUBLE_EQ(d.std, 0.0);
}

TEST(Density, RegularGridInterior) {
  // 1 cm grid in a plane; every interior point has four neighbours at 1 cm.
  PointCloud pc;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) pc.positions.emplace_back(0.01 * i, 0.01 * j, 0.0);
  }
  const auto d = neighborhood_density(pc, 4);
  // Interior points see four neighbours at 1 cm. Edge points see three plus a
  // diagonal; corners see two, a diagonal and one at 2 cm.
  const double r2 = std::sqrt(2.0);
  const double expected = (324 * 1.0 + 72 * (3 + r2) / 4 + 4 * (4 + r2) / 4) / 400 * 0.01;
  EXPECT_NEAR(d.mean, expected, 1e-12);
  EXPECT_NEAR(d.mean, 0.01, 0.0005);

  PointCloud ring;
  for (int i = 0; i < 100; ++i) {
    const double a = 2 * M_PI * i / 100.0;
    ring.positions.emplace_back(std::cos(a), std::sin(a), 0.0);
  }
  const double chord = 2 * std::sin(M_PI / 100.0);
  const auto r = neighborhood_density(ring, 2);
  EXPECT_NEAR(r.mean, chord, 1e-12);
  EXPECT_NEAR(r.std, 0.0, 1e-12);
}

TEST(Density, TooFewPoints) {
  PointCloud pc;
  pc.positions = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  EXPECT_THROW(neighborhood_density(pc, 2), InvalidArgument);
}

PointCloud scene_with(const std::vector<std::size_t>& per_class, bool instances = false) {
  PointCloud pc;
  pc.labels.emplace();
  if (instances) pc.instances.emplace();
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (std::size_t i = 0; i < per_class[c]; ++i) {
      pc.positions.emplace_back(double(i), double(c), 0.0);
      pc.labels->push_back(static_cast<Label>(c));
      if (instances) pc.instances->push_back(static_cast<InstanceId>(c * 100 + i % 2));
    }
  }
  return pc;
}

TEST(ClassStatistics, IdenticalScenes) {
  std::vector<PointCloud> scenes{scene_with({10}), scene_with({10})};
  const auto s = class_statistics(scenes, 1);
  EXPECT_DOUBLE_EQ(s.points_mean[0], 10.0);
  EXPECT_DOUBLE_EQ(s.points_std[0], 0.0);
  EXPECT_DOUBLE_EQ(s.point_share[0], 1.0);
  EXPECT_FALSE(s.has_instances());
}

TEST(ClassStatistics, PopulationStd) {
  std::vector<PointCloud> scenes{scene_with({1}), scene_with({2}), scene_with({3})};
  const auto s = class_statistics(scenes, 1);
  EXPECT_DOUBLE_EQ(s.points_mean[0], 2.0);
  EXPECT_NEAR(s.points_std[0], std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(ClassStatistics, EngineeredShellShare) {
  // wall, floor, ceiling = 943 of 1000 points; the rest spread over others.
  std::vector<PointCloud> scenes{scene_with({300, 300, 343, 20, 0, 17, 20}),
                                 scene_with({320, 280, 343, 10, 0, 27, 20})};
  const auto s = class_statistics(scenes, 11);
  EXPECT_NEAR(s.point_share[0] + s.point_share[1] + s.point_share[2], 0.943, 1e-9);
  const double total = std::accumulate(s.point_share.begin(), s.point_share.end(), s.ignore_share);
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(ClassStatistics, InstancesAndIgnore) {
  auto a = scene_with({4, 2}, true);
  a.labels->push_back(kIgnoreLabel);
  a.positions.emplace_back(9, 9, 9);
  a.instances->push_back(0);
  std::vector<PointCloud> scenes{a};
  const auto s = class_statistics(scenes, 2);
  ASSERT_TRUE(s.has_instances());
  EXPECT_DOUBLE_EQ(s.instances_mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.instances_mean[1], 2.0);
  EXPECT_NEAR(s.ignore_share, 1.0 / 7.0, 1e-15);
  for (double v : s.points_std) EXPECT_GE(v, 0.0);
}

TEST(ClassStatistics, UnlabeledSceneIsAnError) {
  std::vector<PointCloud> scenes{scene_with({3})};
  scenes[0].labels.reset();
  EXPECT_THROW(class_statistics(scenes, 1), InvalidArgument);
}

TEST(ClassStatistics, FromManifest) {
  testing::TempDir dir("stats");
  DatasetManifest m;
  m.root = dir.path();
  for (int i = 0; i < 3; ++i) {
    const std::string id = "s" + std::to_string(i);
    save_pointcloud(scene_with({std::size_t(i + 1), 2}), dir / (id + ".ply"), CloudFormat::kPlyBinaryLe);
    m.scenes.push_back({id, id + ".ply", Split::kTrain});
  }
  const auto s = class_statistics(m, 2);
  EXPECT_EQ(s.num_scenes, 3u);
  EXPECT_DOUBLE_EQ(s.points_mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.points_mean[1], 2.0);
}

}  // namespace
}  // namespace shellseg
