#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "shellseg/error.hpp"
#include "shellseg/io.hpp"
#include "shellseg/manifest.hpp"
#include "test_util.hpp"

namespace shellseg {
namespace {

using testing::TempDir;

PointCloud full_cloud() {
  PointCloud pc;
  pc.scene_id = "room_a";
  pc.positions = {Vec3(0.5, -1.25, 2.0), Vec3(3.0, 0.0, -0.125), Vec3(-7.5, 1.0e3, 0.0625)};
  pc.colors = std::vector<Rgb>{{1, 2, 3}, {255, 0, 128}, {10, 20, 30}};
  pc.intensity = std::vector<float>{0.25f, 1.5f, -3.0f};
  pc.labels = std::vector<Label>{0, 10, kIgnoreLabel};
  pc.instances = std::vector<InstanceId>{0, 7, 4000000000u};
  return pc;
}

class CloudFormats : public ::testing::TestWithParam<CloudFormat> {};

TEST_P(CloudFormats, RoundTripAllFields) {
  const auto pc = full_cloud();
  const auto back = parse_pointcloud(serialize_pointcloud(pc, GetParam()), GetParam());
  EXPECT_EQ(back, pc);
}

TEST_P(CloudFormats, AbsentFieldsStayAbsent) {
  PointCloud pc;
  pc.positions = {Vec3(1, 2, 3), Vec3(4, 5, 6)};
  pc.labels = std::vector<Label>{1, 2};
  const auto back = parse_pointcloud(serialize_pointcloud(pc, GetParam()), GetParam());
  EXPECT_FALSE(back.colors.has_value());
  EXPECT_FALSE(back.intensity.has_value());
  EXPECT_FALSE(back.instances.has_value());
  ASSERT_TRUE(back.labels.has_value());
  EXPECT_EQ(back, pc);
}

TEST_P(CloudFormats, EmptyCloud) {
  PointCloud pc;
  pc.scene_id = "empty";
  const auto back = parse_pointcloud(serialize_pointcloud(pc, GetParam()), GetParam());
  EXPECT_EQ(back.size(), 0u);
  EXPECT_EQ(back.scene_id, "empty");
}

TEST_P(CloudFormats, FileRoundTrip) {
  TempDir dir("io");
  const auto pc = full_cloud();
  const auto path = dir / "cloud.bin";
  save_pointcloud(pc, path, GetParam());
  EXPECT_EQ(detect_cloud_format(path), GetParam());
  EXPECT_EQ(load_pointcloud(path), pc);
  EXPECT_EQ(load_pointcloud(path, GetParam()), pc);
}

INSTANTIATE_TEST_SUITE_P(All, CloudFormats,
                         ::testing::Values(CloudFormat::kPlyAscii, CloudFormat::kPlyBinaryLe,
                                           CloudFormat::kColumnar));

TEST(Ply, FivePointsWithColorsAndLabels) {
  const std::string text =
      "ply\nformat ascii 1.0\nelement vertex 5\n"
      "property float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty int label\n"
      "end_header\n"
      "0 0 0 1 2 3 0\n1 0 0 4 5 6 1\n0 1 0 7 8 9 2\n0 0 1 10 11 12 1\n1 1 1 13 14 15 0\n";
  const auto pc = parse_pointcloud(text, CloudFormat::kPlyAscii);
  ASSERT_EQ(pc.size(), 5u);
  ASSERT_TRUE(pc.colors && pc.labels);
  EXPECT_FALSE(pc.intensity || pc.instances);
  EXPECT_EQ((*pc.colors)[4], (Rgb{13, 14, 15}));
  EXPECT_EQ((*pc.labels)[2], 2);
  // Writing and re-reading through every format keeps the fields.
  for (auto f : {CloudFormat::kPlyAscii, CloudFormat::kPlyBinaryLe, CloudFormat::kColumnar}) {
    EXPECT_EQ(parse_pointcloud(serialize_pointcloud(pc, f), f), pc);
  }
}

TEST(Ply, UnknownPropertiesAreSkipped) {
  const std::string text =
      "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 2\n"
      "property float x\nproperty float nx\nproperty float y\nproperty float z\n"
      "end_header\n1 9 2 3\n4 9 5 6\n";
  const auto pc = parse_pointcloud(text, CloudFormat::kPlyAscii);
  ASSERT_EQ(pc.size(), 2u);
  EXPECT_EQ(pc.positions[1], Vec3(4, 5, 6));
}

TEST(Ply, BinaryTruncationReportsOffset) {
  auto pc = testing::random_cloud(10, 3);
  for (auto& p : pc.positions) p = p.cast<float>().cast<double>();
  std::string bytes = serialize_pointcloud(pc, CloudFormat::kPlyBinaryLe);
  const auto header_end = bytes.find("end_header\n") + std::strlen("end_header\n");
  const std::size_t stride = 3 * 4 + 3 + 2;  // xyz float, rgb uchar, ushort label
  ASSERT_EQ(bytes.size(), header_end + 10 * stride);
  bytes.resize(header_end + 9 * stride + 5);  // ninth record complete, tenth partial
  try {
    parse_pointcloud(bytes, CloudFormat::kPlyBinaryLe);
    FAIL() << "expected a truncation error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), header_end + 9 * stride);
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
}

TEST(Ply, AsciiTruncationReportsOffset) {
  std::string text = "ply\nformat ascii 1.0\nelement vertex 10\nproperty float x\nproperty float y\n"
                     "property float z\nend_header\n";
  for (int i = 0; i < 9; ++i) text += std::to_string(i) + " 0 0\n";
  try {
    parse_pointcloud(text, CloudFormat::kPlyAscii);
    FAIL() << "expected a truncation error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), text.size());
  }
}

TEST(Ply, InconsistentColumnsReportOffset) {
  const std::string head = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                           "property float z\nend_header\n";
  const std::string text = head + "1 2 3\n4 5\n";
  try {
    parse_pointcloud(text, CloudFormat::kPlyAscii);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), head.size() + 6);
  }
}

TEST(Ply, MalformedHeader) {
  EXPECT_THROW(parse_pointcloud("plx\n", CloudFormat::kPlyAscii), FormatError);
  EXPECT_THROW(parse_pointcloud("ply\nformat ascii 1.0\nelement vertex 1\nend_header\n0 0 0\n",
                                CloudFormat::kPlyAscii),
               FormatError);  // no x/y/z
  EXPECT_THROW(parse_pointcloud("ply\nformat ascii 1.0\nelement vertex x\n", CloudFormat::kPlyAscii),
               FormatError);
  EXPECT_THROW(parse_pointcloud("ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n",
                                CloudFormat::kPlyBinaryLe),
               FormatError);
}

TEST(Ply, RejectsPositionsBeyondFloat) {
  PointCloud pc;
  pc.positions = {Vec3(1e300, 0, 0)};
  EXPECT_THROW(serialize_pointcloud(pc, CloudFormat::kPlyBinaryLe), InvalidArgument);
  EXPECT_NO_THROW(serialize_pointcloud(pc, CloudFormat::kColumnar));
}

TEST(Columnar, CorruptionIsReported) {
  const auto bytes = serialize_pointcloud(full_cloud(), CloudFormat::kColumnar);
  EXPECT_THROW(parse_pointcloud(bytes.substr(0, bytes.size() - 1), CloudFormat::kColumnar), FormatError);
  EXPECT_THROW(parse_pointcloud(bytes + "x", CloudFormat::kColumnar), FormatError);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(parse_pointcloud(bad, CloudFormat::kColumnar), FormatError);
}

TEST(Io, UnwritablePathIsIoError) {
  EXPECT_THROW(save_pointcloud(full_cloud(), "/nonexistent_dir/x/cloud.ply", CloudFormat::kPlyAscii), IoError);
  EXPECT_THROW(load_pointcloud("/nonexistent_dir/cloud.ply"), IoError);
}

TEST(PointCloud, ValidateCatchesMismatches) {
  auto pc = full_cloud();
  EXPECT_NO_THROW(validate(pc, 11));
  EXPECT_THROW(validate(pc, 5), InvalidArgument);  // label 10
  pc.colors->pop_back();
  EXPECT_THROW(validate(pc), InvalidArgument);
  auto nan = full_cloud();
  nan.positions[0].x() = std::nan("");
  EXPECT_THROW(validate(nan), InvalidArgument);
}

TEST(PointCloud, SelectKeepsArraysAligned) {
  const auto pc = full_cloud();
  const std::vector<std::uint32_t> idx{2, 0};
  const auto s = select(pc, idx);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.positions[0], pc.positions[2]);
  EXPECT_EQ((*s.instances)[1], (*pc.instances)[0]);
  EXPECT_EQ((*s.intensity)[0], (*pc.intensity)[2]);
}

TEST(Manifest, RoundTripAndSplits) {
  DatasetManifest m;
  m.label_space = "shell11";
  m.scenes = {{"a", "a.ply", Split::kTrain}, {"b", "sub/b.ply", Split::kVal}, {"c", "c.ply", Split::kTest}};
  const auto back = parse_manifest(format_manifest(m), "/data");
  EXPECT_EQ(back.scenes, m.scenes);
  EXPECT_EQ(back.label_space, "shell11");
  EXPECT_EQ(back.resolve(back.scenes[1]), std::filesystem::path("/data/sub/b.ply"));
  EXPECT_EQ(back.in_split(Split::kVal).size(), 1u);

  TempDir dir("manifest");
  save_manifest(m, dir / "m.txt");
  const auto loaded = load_manifest(dir / "m.txt");
  EXPECT_EQ(loaded.scenes, m.scenes);
  EXPECT_EQ(loaded.root, dir.path());
}

TEST(Manifest, RejectsDuplicatesAndBadSplits) {
  EXPECT_THROW(parse_manifest("a a.ply train\na b.ply test\n", "."), InvalidArgument);
  EXPECT_THROW(parse_manifest("a a.ply holdout\n", "."), InvalidArgument);
  EXPECT_THROW(parse_manifest("a\n", "."), InvalidArgument);
}

}  // namespace
}  // namespace shellseg
