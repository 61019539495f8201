#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "shellseg/augment.hpp"
#include "shellseg/error.hpp"
#include "test_util.hpp"

namespace shellseg {
namespace {

GeometricAugment geometric_off() { return AugmentConfig::none().geometric; }

TEST(Geometric, CenterShiftOnly) {
  PointCloud pc;
  pc.positions = {Vec3(1, 2, 3), Vec3(3, 4, 5), Vec3(5, 0, 4)};
  auto cfg = geometric_off();
  cfg.center_shift = true;
  const auto out = apply_geometric(pc, cfg, 1);
  EXPECT_DOUBLE_EQ(out.positions[0].z(), 0.0);
  EXPECT_DOUBLE_EQ(out.positions[1].z(), 2.0);
  EXPECT_DOUBLE_EQ(out.positions[0].x(), 1.0 - 3.0);
  EXPECT_DOUBLE_EQ(out.positions[2].y(), 0.0 - 2.0);
}

TEST(Geometric, AllOffIsIdentity) {
  const auto pc = testing::random_cloud(50, 1);
  EXPECT_EQ(apply_geometric(pc, geometric_off(), 9), pc);
}

TEST(Geometric, RotationPreservesDistances) {
  const auto pc = testing::random_cloud(60, 2);
  auto cfg = geometric_off();
  cfg.rotate_z = true;
  cfg.rotate_xy_max = 0.3;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto out = apply_geometric(pc, cfg, seed);
    for (std::size_t i = 0; i < pc.size(); i += 7) {
      for (std::size_t j = i + 1; j < pc.size(); j += 5) {
        const double a = (pc.positions[i] - pc.positions[j]).norm();
        const double b = (out.positions[i] - out.positions[j]).norm();
        ASSERT_NEAR(b, a, 1e-12 * a);
      }
    }
    EXPECT_EQ(out.labels, pc.labels);
  }
}

TEST(Geometric, DropoutRemovesFractionAndKeepsAlignment) {
  auto pc = testing::random_cloud(100, 3);
  pc.instances = std::vector<InstanceId>(100);
  for (InstanceId i = 0; i < 100; ++i) (*pc.instances)[i] = i;
  auto cfg = geometric_off();
  cfg.dropout_p = 1.0;
  cfg.dropout_ratio = 0.2;
  const auto out = apply_geometric(pc, cfg, 4);
  ASSERT_EQ(out.size(), 80u);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto src = (*out.instances)[i];
    EXPECT_EQ(out.positions[i], pc.positions[src]);
    EXPECT_EQ((*out.labels)[i], (*pc.labels)[src]);
    EXPECT_EQ((*out.colors)[i], (*pc.colors)[src]);
  }
}

TEST(Geometric, JitterIsClipped) {
  const auto pc = testing::random_cloud(500, 5);
  auto cfg = geometric_off();
  cfg.jitter_sigma = 1.0;
  cfg.jitter_clip = 0.02;
  const auto out = apply_geometric(pc, cfg, 6);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    EXPECT_LE((out.positions[i] - pc.positions[i]).cwiseAbs().maxCoeff(), 0.02 + 1e-15);
  }
}

TEST(Geometric, DeterministicPerSeed) {
  const auto pc = testing::random_cloud(80, 7);
  const AugmentConfig cfg;
  EXPECT_EQ(apply_geometric(pc, cfg.geometric, 11), apply_geometric(pc, cfg.geometric, 11));
  EXPECT_NE(apply_geometric(pc, cfg.geometric, 11), apply_geometric(pc, cfg.geometric, 12));
}

TEST(Chromatic, NormalizationEndpoints) {
  PointCloud pc;
  pc.positions = {Vec3::Zero(), Vec3::Ones()};
  pc.colors = std::vector<Rgb>{{255, 255, 255}, {0, 0, 0}};
  const auto f = apply_chromatic(pc, AugmentConfig::none().chromatic, 0);
  EXPECT_DOUBLE_EQ(f(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(f(1, 2), -1.0);
}

TEST(Chromatic, AutoContrastFullBlend) {
  PointCloud pc;
  pc.positions = {Vec3::Zero(), Vec3::Ones()};
  pc.colors = std::vector<Rgb>{{50, 50, 50}, {100, 100, 100}};
  auto cfg = AugmentConfig::none().chromatic;
  cfg.auto_contrast_p = 1.0;
  cfg.auto_contrast_blend = 1.0;
  cfg.normalize = false;
  const auto f = apply_chromatic(pc, cfg, 0);
  EXPECT_DOUBLE_EQ(f(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(f(1, 0), 255.0);
}

TEST(Chromatic, OffAndUnnormalizedIsIdentity) {
  const auto pc = testing::random_cloud(20, 8);
  auto cfg = AugmentConfig::none().chromatic;
  cfg.normalize = false;
  const auto f = apply_chromatic(pc, cfg, 3);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    for (int c = 0; c < 3; ++c) EXPECT_EQ(f(static_cast<Eigen::Index>(i), c), (*pc.colors)[i][c]);
  }
}

TEST(Chromatic, StaysInRangeAndNeedsColors) {
  const auto pc = testing::random_cloud(200, 9);
  ChromaticAugment cfg;
  cfg.auto_contrast_p = 1.0;
  const auto f = apply_chromatic(pc, cfg, 4);
  EXPECT_GE(f.minCoeff(), -1.0);
  EXPECT_LE(f.maxCoeff(), 1.0);
  PointCloud bare;
  bare.positions = {Vec3::Zero()};
  EXPECT_THROW(apply_chromatic(bare, cfg, 0), InvalidArgument);
}

TEST(ModelFeatures, ChannelsMapping) {
  const auto pc = testing::random_cloud(5, 10);
  EXPECT_EQ(model_features(pc, 3), normalized_colors(pc));
  EXPECT_EQ(model_features(pc, 1), FeatureMatrix::Ones(5, 1));
  EXPECT_THROW(model_features(pc, 2), InvalidArgument);
}

TEST(Tta, IdentityOnly) {
  const auto pc = testing::random_cloud(10, 11);
  const auto inst = tta_instances(pc, TtaConfig::identity());
  ASSERT_EQ(inst.size(), 1u);
  EXPECT_EQ(inst[0].cloud, pc);
}

TEST(Tta, CartesianCountAndLabelsPreserved) {
  const auto pc = testing::random_cloud(30, 12);
  const auto inst = tta_instances(pc, TtaConfig{});
  ASSERT_EQ(inst.size(), 8u);
  EXPECT_EQ(inst[0].cloud, pc);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    EXPECT_EQ(inst[i].transform_id, i);
    EXPECT_EQ(inst[i].cloud.labels, pc.labels);
    EXPECT_EQ(inst[i].cloud.size(), pc.size());
    // Rigid motion about the z axis through the origin keeps radius and height.
    for (std::size_t p = 0; p < pc.size(); ++p) {
      const auto& a = pc.positions[p];
      const auto& b = inst[i].cloud.positions[p];
      EXPECT_NEAR(std::hypot(a.x(), a.y()), std::hypot(b.x(), b.y()), 1e-12);
      EXPECT_EQ(a.z(), b.z());
    }
  }
  EXPECT_EQ(std::count_if(inst.begin(), inst.end(), [](const TtaInstance& t) { return t.mirrored; }), 4);
}

TEST(Tta, QuarterTurn) {
  PointCloud pc;
  pc.positions = {Vec3(1, 0, 2)};
  TtaConfig cfg{{std::numbers::pi / 2}, false};
  const auto inst = tta_instances(pc, cfg);
  ASSERT_EQ(inst.size(), 2u);  // identity is always included
  EXPECT_NEAR(inst[1].cloud.positions[0].x(), 0.0, 1e-15);
  EXPECT_NEAR(inst[1].cloud.positions[0].y(), 1.0, 1e-15);
}

}  // namespace
}  // namespace shellseg
