#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "shellseg/error.hpp"
#include "shellseg/eval.hpp"
#include "shellseg/io.hpp"
#include "shellseg/manifest.hpp"
#include "shellseg/model.hpp"
#include "shellseg/stats.hpp"
#include "shellseg_cli/cli.hpp"
#include "shellseg_cli/config.hpp"
#include "shellseg_cli/image.hpp"
#include "test_util.hpp"

namespace shellseg::cli {
namespace {

namespace fs = std::filesystem;
using shellseg::testing::TempDir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

// ------------------------------------------------------------------ config --

TEST(Config, TypedLookupsAndEcho) {
  auto c = Config::parse("[a]\nx = 2.5\nn = 7\nflag = off\nlist = 1, 2,3\n", "/base");
  EXPECT_DOUBLE_EQ(c.get_double("a", "x", 0.0), 2.5);
  EXPECT_EQ(c.get_size("a", "n", 0), 7u);
  EXPECT_FALSE(c.get_bool("a", "flag", true));
  EXPECT_EQ(c.get_sizes("a", "list", {}), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(c.get_double("b", "missing", 0.1), 0.1);
  c.check_unknown();
  const auto echo = c.echo();
  EXPECT_NE(echo.find("x=2.5"), std::string::npos);
  EXPECT_NE(echo.find("flag=off"), std::string::npos);
  EXPECT_NE(echo.find("[b]"), std::string::npos);
  EXPECT_NE(echo.find("missing=0.1"), std::string::npos);

  // The echo parses back to the same values.
  auto again = Config::parse(echo, "/base");
  EXPECT_DOUBLE_EQ(again.get_double("b", "missing", 9.0), 0.1);
}

TEST(Config, UnknownKeysAndBadValuesAreConfigErrors) {
  auto c = Config::parse("[train]\nmax_lr = 0.01\nmax_lrr = 1\n", "/");
  c.get_double("train", "max_lr", 0.0);
  EXPECT_THROW(c.check_unknown(), ConfigError);
  auto d = Config::parse("[train]\nmax_lr = fast\n", "/");
  try {
    d.get_double("train", "max_lr", 0.0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("[train] max_lr"), std::string::npos);
  }
  auto e = Config::parse("[x]\nflag = maybe\n", "/");
  EXPECT_THROW(e.get_bool("x", "flag", false), ConfigError);
  auto f = Config::parse("[x]\n", "/");
  EXPECT_THROW(f.require_path("x", "p"), ConfigError);
  EXPECT_THROW(Config::parse("[x\n", "/"), ConfigError);
}

TEST(Config, RelativePathsResolveAgainstTheConfigDirectory) {
  auto c = Config::parse("[data]\nmanifest = sub/m.txt\nabs = /tmp/x\n", "/home/run");
  EXPECT_EQ(c.require_path("data", "manifest"), fs::path("/home/run/sub/m.txt"));
  EXPECT_EQ(c.require_path("data", "abs"), fs::path("/tmp/x"));
}

TEST(Config, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 6e-3, 1e-300, 123456789.125}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

// ------------------------------------------------------------------- image --

PointCloud colored(std::vector<Vec3> positions, std::vector<Rgb> colors) {
  PointCloud pc;
  pc.positions = std::move(positions);
  pc.colors = std::move(colors);
  return pc;
}

TEST(Panorama, PointOnXAxisLandsInTheCenter) {
  const auto img = render_panorama(colored({Vec3(3, 0, 0)}, {{10, 20, 30}}), 64, 32, PanoramaColor::kRgb);
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 64; ++x) {
      const Rgb expected = (x == 32 && y == 16) ? Rgb{10, 20, 30} : kEmptyPixel;
      ASSERT_EQ(img.at(x, y), expected) << x << "," << y;
    }
  }
}

TEST(Panorama, AzimuthAndElevationMapping) {
  // -y is azimuth -pi/2: a quarter of the width; straight up is the top row.
  const auto img = render_panorama(colored({Vec3(0, -2, 0), Vec3(0.001, 0, 5)}, {{1, 1, 1}, {2, 2, 2}}), 40, 20,
                                   PanoramaColor::kRgb);
  EXPECT_EQ(img.at(10, 10), (Rgb{1, 1, 1}));
  EXPECT_EQ(img.at(20, 0), (Rgb{2, 2, 2}));
}

TEST(Panorama, NearestPointWins) {
  const auto a = render_panorama(colored({Vec3(2, 0, 0), Vec3(1, 0, 0)}, {{200, 0, 0}, {0, 200, 0}}), 16, 8,
                                 PanoramaColor::kRgb);
  EXPECT_EQ(a.at(8, 4), (Rgb{0, 200, 0}));
  const auto b = render_panorama(colored({Vec3(1, 0, 0), Vec3(2, 0, 0)}, {{0, 200, 0}, {200, 0, 0}}), 16, 8,
                                 PanoramaColor::kRgb);
  EXPECT_EQ(b.at(8, 4), (Rgb{0, 200, 0}));
}

TEST(Panorama, ClassColorsAndEmptyScene) {
  auto pc = colored({Vec3(1, 0, 0)}, {{0, 0, 0}});
  pc.labels = std::vector<Label>{3};
  EXPECT_EQ(render_panorama(pc, 8, 4, PanoramaColor::kClass).at(4, 2), class_color(3));
  const auto empty = render_panorama(PointCloud{}, 8, 4, PanoramaColor::kRgb);
  EXPECT_EQ(empty, Image(8, 4, kEmptyPixel));
  pc.labels.reset();
  EXPECT_THROW(render_panorama(pc, 8, 4, PanoramaColor::kClass), InvalidArgument);
}

TEST(Png, RoundTrip) {
  TempDir dir("png");
  Image img(5, 3, {1, 2, 3});
  img.set(4, 2, {250, 0, 7});
  write_png(img, dir / "a.png", {{"seed", "5"}});
  EXPECT_EQ(read_png(dir / "a.png"), img);
  EXPECT_THROW(write_png(img, dir / "missing" / "a.png"), IoError);
  spit(dir / "bad.png", "not a png");
  EXPECT_THROW(read_png(dir / "bad.png"), FormatError);
}

TEST(Chart, OneBarPerPresentClass) {
  std::vector<PointCloud> scenes;
  for (std::uint64_t s = 0; s < 3; ++s) {
    auto pc = shellseg::testing::random_cloud(100 + 50 * s, s, 3);
    pc.instances = std::vector<InstanceId>(pc.size(), 0);
    scenes.push_back(pc);
  }
  const auto stats = class_statistics(scenes, 5);  // classes 3 and 4 never occur
  const auto chart = render_class_chart(stats, 400, 200);
  EXPECT_EQ(chart.bars, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(chart.image.width, 400u);
}

TEST(Chart, SingleSceneHasFlatWhiskers) {
  std::vector<PointCloud> one{shellseg::testing::random_cloud(200, 9, 2)};
  const auto stats = class_statistics(one, 2);
  for (double s : stats.points_std) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(render_class_chart(stats, 200, 100).bars.size(), 2u);
}

// ---------------------------------------------------------------- commands --

// One small dataset and trained checkpoint shared by the command tests.
class Commands : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    spit(*dir_ / "synth.ini",
         "[synth]\nscenes = 4\ndensity = 25\nlength = 4,5\nwidth = 3,4\nsplit = 0.5,0.25,0.25\n"
         "format = columnar\n");
    ASSERT_EQ(invoke({"synth", "--config", (*dir_ / "synth.ini").string(), "--out", (*dir_ / "data").string(),
                      "--seed", "2"})
                  .code,
              0);
    spit(*dir_ / "train.ini",
         "[data]\nmanifest = data/manifest.txt\n"
         "[model]\nwidths = 8,16\ngroup_size = 4\npool_voxel_sizes = 0.3,0.6\n"
         "[train]\nmax_epochs = 2\nvoxel_size = 0.1\ncrop_points = 600\nmax_lr = 0.006\n");
    const auto r = invoke({"train", "--config", (*dir_ / "train.ini").string(), "--out", (*dir_ / "run").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static const TempDir& dir() { return *dir_; }

 private:
  static TempDir* dir_;
};

TempDir* Commands::dir_ = nullptr;

TEST_F(Commands, SynthWritesManifestWithSeed) {
  const auto m = load_manifest(dir() / "data" / "manifest.txt");
  EXPECT_EQ(m.scenes.size(), 4u);
  EXPECT_EQ(m.in_split(Split::kTrain).size(), 2u);
  EXPECT_NE(slurp(dir() / "data" / "manifest.txt").find("# seed 2"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir() / "data" / kResolvedConfig));
}

TEST_F(Commands, TrainWritesCheckpointHistoryAndEcho) {
  const auto history = slurp(dir() / "run" / kHistoryFile);
  EXPECT_EQ(history.rfind("# seed 0\nepoch\tloss", 0), 0u);
  EXPECT_NE(history.find("\n2\t"), std::string::npos);
  const auto ckpt = read_checkpoint((dir() / "run" / kCheckpointFile).string());
  EXPECT_EQ(ckpt.label_space, "shell11");
  EXPECT_DOUBLE_EQ(ckpt.train_max_lr, 0.006);
  const auto echo = slurp(dir() / "run" / kResolvedConfig);
  EXPECT_NE(echo.find("max_epochs=2"), std::string::npos);
  EXPECT_NE(echo.find("jitter_sigma=0.005"), std::string::npos);  // defaults are echoed too
}

TEST_F(Commands, RerunFromEchoIsByteIdentical) {
  const auto echo = dir() / "run" / kResolvedConfig;
  const auto r = invoke({"train", "--config", echo.string(), "--out", (dir() / "rerun").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir() / "rerun" / kHistoryFile), slurp(dir() / "run" / kHistoryFile));
  EXPECT_EQ(slurp(dir() / "rerun" / kCheckpointFile), slurp(dir() / "run" / kCheckpointFile));
}

TEST_F(Commands, EvalWritesMetricsAcrossLabelSpaces) {
  spit(dir() / "eval.ini", "[data]\nmanifest = data/manifest.txt\n[eval]\ncheckpoint = run/model.ckpt\n");
  auto r = invoke({"eval", "--config", (dir() / "eval.ini").string(), "--out", (dir() / "ev").string(), "--tta",
                   "off"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = slurp(dir() / "ev" / kMetricsTable);
  EXPECT_NE(table.find("class\tIoU\tAcc\tvalid"), std::string::npos);
  EXPECT_NE(slurp(dir() / "ev" / kMetricsJson).find("\"seed\": 0"), std::string::npos);
  EXPECT_NE(slurp(dir() / "ev" / kResolvedConfig).find("enabled=off"), std::string::npos);

  spit(dir() / "eval2.ini",
       "[data]\nmanifest = data/manifest.txt\nlabel_space = vasad-like\n[eval]\ncheckpoint = run/model.ckpt\n"
       "[tta]\nyaw_degrees = 0,180\nmirror_x = off\n");
  r = invoke({"eval", "--config", (dir() / "eval2.ini").string(), "--out", (dir() / "ev2").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(dir() / "ev2" / "translation.tsv").find("railing\tnone\t(excluded)"), std::string::npos);

  const auto again =
      invoke({"eval", "--config", (dir() / "ev2" / kResolvedConfig).string(), "--out", (dir() / "ev3").string()});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(slurp(dir() / "ev3" / kMetricsTable), slurp(dir() / "ev2" / kMetricsTable));
  EXPECT_EQ(slurp(dir() / "ev3" / kMetricsJson), slurp(dir() / "ev2" / kMetricsJson));
}

TEST_F(Commands, StatsReportShellShareAndChart) {
  const auto r = invoke({"stats", "--config", (dir() / "train.ini").string(), "--out", (dir() / "st").string()});
  // train.ini carries [model]/[train] sections that stats does not read.
  EXPECT_EQ(r.code, kExitConfig);
  spit(dir() / "stats.ini", "[data]\nmanifest = data/manifest.txt\n");
  const auto ok = invoke({"stats", "--config", (dir() / "stats.ini").string(), "--out", (dir() / "st").string()});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_NE(ok.out.find("# wall+floor+ceiling share 0."), std::string::npos);
  const auto img = read_png(dir() / "st" / kChartImage);
  EXPECT_EQ(img.width, 960u);
}

TEST_F(Commands, PrelabelRoundTripsThroughFiles) {
  const auto m = load_manifest(dir() / "data" / "manifest.txt");
  const auto input = m.resolve(m.in_split(Split::kTest).front());
  const auto before = slurp(input);
  auto unlabeled = load_pointcloud(input);
  const auto truth = *unlabeled.labels;
  unlabeled.labels.reset();
  save_pointcloud(unlabeled, dir() / "bare.col", CloudFormat::kColumnar);

  spit(dir() / "pre.ini", "[prelabel]\ncheckpoint = run/model.ckpt\ninputs = " + input.string() +
                              ", bare.col\nformat = columnar\n[tta]\nenabled = off\n");
  const auto r = invoke({"prelabel", "--config", (dir() / "pre.ini").string(), "--out", (dir() / "pl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(input), before);  // inputs untouched

  const auto stem = input.stem().string();
  const auto labeled = load_pointcloud(dir() / "pl" / (stem + ".prelabel.col"));
  ASSERT_TRUE(labeled.labels.has_value());
  auto report = score(*labeled.labels, truth, 11);
  report.precise = true;
  EXPECT_EQ(slurp(dir() / "pl" / (stem + ".metrics.tsv")), "# seed 0\n" + format_metrics_table(report, shell11()));
  EXPECT_FALSE(fs::exists(dir() / "pl" / "bare.metrics.tsv"));
  EXPECT_TRUE(fs::exists(dir() / "pl" / "bare.prelabel.col"));
  EXPECT_EQ(*load_pointcloud(dir() / "pl" / "bare.prelabel.col").labels, *labeled.labels);
  EXPECT_NE(slurp(dir() / "pl" / "bare.summary.tsv").find("# vote margin mean 1.0000"), std::string::npos);
}

TEST_F(Commands, FinetuneWarnsAtThePretrainingPeak) {
  spit(dir() / "ft.ini",
       "[data]\nmanifest = data/manifest.txt\nlabel_space = pretrain-space\n[finetune]\ncheckpoint = "
       "run/model.ckpt\n[train]\nmax_epochs = 1\nvoxel_size = 0.1\ncrop_points = 400\nmax_lr = 0.006\n");
  auto r = invoke({"finetune", "--config", (dir() / "ft.ini").string(), "--out", (dir() / "ft").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_EQ(read_checkpoint((dir() / "ft" / kCheckpointFile).string()).model.num_classes(), 9u);

  spit(dir() / "ft2.ini",
       "[data]\nmanifest = data/manifest.txt\n[finetune]\ncheckpoint = run/model.ckpt\n"
       "[train]\nmax_epochs = 1\nvoxel_size = 0.1\ncrop_points = 400\nmax_lr = 0.01\n");
  r = invoke({"finetune", "--config", (dir() / "ft2.ini").string(), "--out", (dir() / "ft2").string()});
  EXPECT_EQ(r.code, kExitConfig);
}

TEST_F(Commands, RenderPanorama) {
  const auto m = load_manifest(dir() / "data" / "manifest.txt");
  const auto scene = m.resolve(m.scenes.front()).string();
  spit(dir() / "render.ini", "[render]\nscene = " + scene + "\nwidth = 64\nheight = 32\n");
  auto r = invoke({"render", "--config", (dir() / "render.ini").string(), "--out", (dir() / "rd").string(),
                   "--labels", "class"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto img = read_png(dir() / "rd" / kPanoramaImage);
  EXPECT_EQ(img.width, 64u);
  std::size_t yellow = 0;
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 64; ++x) yellow += img.at(x, y) == kEmptyPixel;
  }
  EXPECT_LT(yellow, 64u * 32u);

  spit(dir() / "render2.ini", "[render]\nscene = " + scene + "\nwidth = 16\nheight = 8\nmax_range = 0.01\n");
  r = invoke({"render", "--config", (dir() / "render2.ini").string(), "--out", (dir() / "rd2").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_EQ(read_png(dir() / "rd2" / kPanoramaImage), Image(16, 8, kEmptyPixel));
}

TEST_F(Commands, ExitCodes) {
  EXPECT_EQ(invoke({"train", "--config", (dir() / "nope.ini").string()}).code, kExitIo);
  EXPECT_EQ(invoke({"train", "--bogus"}).code, kExitConfig);
  EXPECT_EQ(invoke({}).code, kExitConfig);
  spit(dir() / "missing_manifest.ini", "[data]\nmanifest = nowhere/manifest.txt\n");
  EXPECT_EQ(invoke({"train", "--config", (dir() / "missing_manifest.ini").string(), "--out",
                    (dir() / "x").string()})
                .code,
            kExitIo);
  spit(dir() / "typo.ini", "[data]\nmanifest = data/manifest.txt\n[train]\nmax_epoch = 3\n");
  const auto typo = invoke({"train", "--config", (dir() / "typo.ini").string(), "--out", (dir() / "x").string()});
  EXPECT_EQ(typo.code, kExitConfig);
  EXPECT_NE(typo.err.find("[train] max_epoch"), std::string::npos);

  spit(dir() / "diverge.ini",
       "[data]\nmanifest = data/manifest.txt\n"
       "[model]\nwidths = 8,16\ngroup_size = 4\npool_voxel_sizes = 0.3,0.6\n"
       "[train]\nmax_epochs = 2\nvoxel_size = 0.1\ncrop_points = 400\nmax_lr = 1e300\n");
  const auto div = invoke({"train", "--config", (dir() / "diverge.ini").string(), "--out", (dir() / "dv").string()});
  EXPECT_EQ(div.code, kExitNumeric) << div.err;
  EXPECT_TRUE(fs::exists(dir() / "dv" / "diverged.ckpt"));
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

}  // namespace
}  // namespace shellseg::cli
