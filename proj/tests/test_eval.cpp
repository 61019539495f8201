#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "shellseg/augment.hpp"
#include "shellseg/error.hpp"
#include "shellseg/eval.hpp"
#include "shellseg/model.hpp"
#include "test_util.hpp"

namespace shellseg {
namespace {

using testing::random_cloud;

ModelConfig tiny_model(std::size_t classes, std::uint64_t seed = 3) {
  ModelConfig cfg;
  cfg.stage_widths = {8, 16};
  cfg.group_size = 4;
  cfg.pool_voxel_sizes = {0.3, 0.6};
  cfg.num_classes = classes;
  cfg.seed = seed;
  return cfg;
}

std::vector<Label> random_labels(std::size_t n, std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> d(0, classes - 1);
  std::vector<Label> out(n);
  for (auto& l : out) l = static_cast<Label>(d(rng));
  return out;
}

TEST(Metrics, TwoClassFixture) {
  // truth 0: two predicted 0, one predicted 1; truth 1: one predicted 1.
  const std::vector<Label> pred{0, 0, 1, 1}, truth{0, 0, 0, 1};
  const auto r = score(pred, truth, 2);
  EXPECT_DOUBLE_EQ(r.iou[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.iou[1], 1.0 / 2.0);
  EXPECT_DOUBLE_EQ(r.acc[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.acc[1], 1.0);
  EXPECT_DOUBLE_EQ(r.miou, (2.0 / 3.0 + 0.5) / 2.0);
  EXPECT_DOUBLE_EQ(r.macc, (2.0 / 3.0 + 1.0) / 2.0);
  EXPECT_DOUBLE_EQ(r.allacc, 0.75);
  EXPECT_FALSE(r.precise);
}

TEST(Metrics, AbsentAndExcludedClassesAreNotAveraged) {
  const std::vector<Label> pred{0, 1, 1}, truth{0, 1, 1};
  const auto r = score(pred, truth, 4, {1});
  EXPECT_TRUE(r.valid[0]);
  EXPECT_FALSE(r.valid[1]);
  EXPECT_FALSE(r.valid[2]);
  EXPECT_FALSE(r.valid[3]);
  EXPECT_DOUBLE_EQ(r.miou, 1.0);
  EXPECT_DOUBLE_EQ(r.allacc, 1.0);
}

TEST(Metrics, IgnoredTruthIsSkipped) {
  const std::vector<Label> pred{0, 1, 0}, truth{0, kIgnoreLabel, 0};
  ConfusionMatrix c(2);
  c.accumulate(pred, truth);
  EXPECT_EQ(c.total(), 2u);
  EXPECT_DOUBLE_EQ(metrics(c).allacc, 1.0);
}

TEST(Metrics, Errors) {
  ConfusionMatrix c(3);
  EXPECT_THROW(metrics(c), InvalidArgument);
  const std::vector<Label> a{0, 1}, b{0};
  EXPECT_THROW(c.accumulate(a, b), InvalidArgument);
  const std::vector<Label> bad{0, 3}, ok{0, 1};
  EXPECT_THROW(c.accumulate(bad, ok), InvalidArgument);
  EXPECT_THROW(ConfusionMatrix(0), InvalidArgument);
  EXPECT_THROW(ConfusionMatrix(2, {2}), InvalidArgument);
  ConfusionMatrix d(3, {1});
  EXPECT_THROW(c.merge(d), InvalidArgument);
}

TEST(Metrics, MergeMatchesJointAccumulation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pa = random_labels(300, 5, seed), ta = random_labels(300, 5, seed + 100);
    const auto pb = random_labels(200, 5, seed + 200), tb = random_labels(200, 5, seed + 300);
    ConfusionMatrix a(5), b(5), joint(5);
    a.accumulate(pa, ta);
    b.accumulate(pb, tb);
    auto pj = pa, tj = ta;
    pj.insert(pj.end(), pb.begin(), pb.end());
    tj.insert(tj.end(), tb.begin(), tb.end());
    joint.accumulate(pj, tj);
    a.merge(b);
    EXPECT_EQ(a, joint);
    EXPECT_EQ(metrics(a), metrics(joint));
  }
}

TEST(Metrics, IouNeverExceedsAccuracy) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = score(random_labels(400, 6, seed), random_labels(400, 6, seed ^ 0xABCD), 6);
    for (std::size_t c = 0; c < 6; ++c) {
      if (!r.valid[c]) continue;
      EXPECT_LE(r.iou[c], r.acc[c] + 1e-15);
      EXPECT_GE(r.iou[c], 0.0);
      EXPECT_LE(r.acc[c], 1.0);
    }
  }
}

TEST(Metrics, PerfectPredictionScoresOne) {
  const auto t = random_labels(100, 4, 9);
  const auto r = score(t, t, 4);
  EXPECT_DOUBLE_EQ(r.miou, 1.0);
  EXPECT_DOUBLE_EQ(r.macc, 1.0);
  EXPECT_DOUBLE_EQ(r.allacc, 1.0);
}

TEST(MetricsOutput, TableAndJson) {
  LabelSpace space{"pair", {"floor", "wall"}, {}};
  auto r = score(std::vector<Label>{0, 0, 1, 1}, std::vector<Label>{0, 0, 0, 1}, 2);
  const auto table = format_metrics_table(r, space);
  EXPECT_NE(table.find("class\tIoU\tAcc\tvalid"), std::string::npos);
  EXPECT_NE(table.find("floor\t0.6667\t0.6667"), std::string::npos);
  EXPECT_NE(table.find("wall\t0.5000\t1.0000"), std::string::npos);
  EXPECT_EQ(table.find('*'), std::string::npos);
  r.precise = true;
  EXPECT_NE(format_metrics_table(r, space).find('*'), std::string::npos);

  const auto j = nlohmann::json::parse(metrics_json(r, space));
  EXPECT_DOUBLE_EQ(j.at("mIoU").get<double>(), r.miou);
  EXPECT_DOUBLE_EQ(j.at("allAcc").get<double>(), 0.75);
  EXPECT_TRUE(j.at("precise").get<bool>());
  ASSERT_EQ(j.at("classes").size(), 2u);
  EXPECT_EQ(j.at("classes")[1].at("name").get<std::string>(), "wall");
}

TEST(Votes, TallyMatchesOracle) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cls(0, 3), count(1, 9);
  std::vector<std::vector<Label>> raw(200);
  VoteBuffer buf(200, 4);
  for (std::size_t p = 0; p < raw.size(); ++p) {
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const auto c = static_cast<Label>(cls(rng));
      raw[p].push_back(c);
      buf.vote(p, c);
    }
  }
  EXPECT_EQ(buf.winners(), oracle::tally(raw, 4));
  for (std::size_t p = 0; p < raw.size(); ++p) {
    EXPECT_EQ(buf.coverage(p), raw[p].size());
    const auto w = buf.winner(p);
    EXPECT_DOUBLE_EQ(buf.margin(p), double(buf.votes(p, w)) / double(raw[p].size()));
  }
}

TEST(Votes, TiesGoToLowestIndex) {
  VoteBuffer buf(1, 5);
  buf.vote(0, 3);
  buf.vote(0, 1);
  EXPECT_EQ(buf.winner(0), 1);
  buf.vote(0, 3);
  EXPECT_EQ(buf.winner(0), 3);
}

TEST(Votes, Errors) {
  VoteBuffer buf(2, 3);
  EXPECT_THROW(buf.winner(0), std::logic_error);
  EXPECT_THROW(buf.vote(2, 0), InvalidArgument);
  EXPECT_THROW(buf.vote(0, 3), InvalidArgument);
}

// Fine voxels leave each point alone in its voxel, so one fragment holds the
// whole cloud and identity TTA reduces to a single forward pass.
TEST(Precise, SingleFragmentIdentityEqualsForwardArgmax) {
  const Model model(tiny_model(4));
  const auto pc = random_cloud(300, 21);
  PreciseConfig cfg;
  cfg.voxel_size = 1e-4;
  cfg.tta = TtaConfig::identity();
  const auto res = precise_test(model, pc, cfg);
  const Matrix logits = forward(model, pc.positions, model_features(pc, 3));
  ASSERT_EQ(res.labels.size(), pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i) {
    Eigen::Index arg;
    logits.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    EXPECT_EQ(res.labels[i], arg) << i;
    EXPECT_EQ(res.votes.coverage(i), 1u);
  }
  ASSERT_TRUE(res.report.has_value());
  EXPECT_TRUE(res.report->precise);
  EXPECT_EQ(*res.report, [&] {
    auto r = score(res.labels, *pc.labels, 4);
    r.precise = true;
    return r;
  }());
}

TEST(Precise, EveryPointVotedOncePerTransform) {
  const Model model(tiny_model(4));
  const auto pc = random_cloud(800, 22, 4, 1.5);
  PreciseConfig cfg;
  cfg.voxel_size = 0.2;
  cfg.fragment_budget = 100;
  const auto res = precise_test(model, pc, cfg);
  const std::size_t transforms = cfg.tta.yaw_angles.size() * 2;
  for (std::size_t i = 0; i < pc.size(); ++i) EXPECT_EQ(res.votes.coverage(i), transforms);
  EXPECT_EQ(res.votes.winners(), res.labels);
}

TEST(Precise, Deterministic) {
  const Model model(tiny_model(4));
  const auto pc = random_cloud(500, 23);
  PreciseConfig cfg;
  cfg.voxel_size = 0.15;
  cfg.seed = 4;
  EXPECT_EQ(precise_test(model, pc, cfg).labels, precise_test(model, pc, cfg).labels);
}

TEST(Precise, UnlabeledCloudHasNoReport) {
  const Model model(tiny_model(4));
  auto pc = random_cloud(100, 24);
  pc.labels.reset();
  PreciseConfig cfg;
  cfg.tta = TtaConfig::identity();
  EXPECT_FALSE(precise_test(model, pc, cfg).report.has_value());
}

TEST(Fast, SubsamplePredictionCoversAllPoints) {
  const Model model(tiny_model(4));
  const auto pc = random_cloud(600, 25);
  const auto pred = predict_subsample(model, pc, 0.2, 1);
  ASSERT_EQ(pred.size(), pc.size());
  for (auto p : pred) EXPECT_LT(p, 4);
  std::vector<PointCloud> scenes{pc, random_cloud(400, 26)};
  const auto r = fast_evaluate(model, scenes, 0.2, 1);
  EXPECT_FALSE(r.precise);
  EXPECT_EQ(r, fast_evaluate(model, scenes, 0.2, 1));
}

PointCloud relabeled(PointCloud pc, const LabelSpace& space, std::uint64_t seed) {
  pc.labels = random_labels(pc.size(), space.size(), seed);
  return pc;
}

void expect_matches_oracle(const Model& model, const LabelSpace& model_space,
                           const std::vector<PointCloud>& scenes, const LabelSpace& target_space,
                           const AliasTable& aliases, const PreciseConfig& cfg) {
  const auto report = cross_domain_eval(model, model_space, scenes, target_space, aliases, cfg);
  std::vector<Label> pred, truth;
  for (const auto& s : scenes) {
    auto bare = s;
    bare.labels.reset();
    const auto res = precise_test(model, bare, cfg);
    pred.insert(pred.end(), res.labels.begin(), res.labels.end());
    truth.insert(truth.end(), s.labels->begin(), s.labels->end());
  }
  const auto expected = oracle::intersection_score(model_space, target_space, aliases, pred, truth);
  EXPECT_TRUE(report.precise);
  EXPECT_DOUBLE_EQ(report.miou, expected.miou);
  EXPECT_DOUBLE_EQ(report.macc, expected.macc);
  for (std::size_t c = 0; c < model_space.size(); ++c) {
    const auto name = aliases.canonical(model_space.classes[c]);
    const auto it = expected.classes.find(name);
    if (it == expected.classes.end()) {
      EXPECT_FALSE(report.valid[c]) << name;
      continue;
    }
    EXPECT_EQ(report.valid[c], it->second.valid) << name;
    if (it->second.valid) {
      EXPECT_DOUBLE_EQ(report.iou[c], it->second.iou) << name;
      EXPECT_DOUBLE_EQ(report.acc[c], it->second.acc) << name;
    }
  }
}

TEST(CrossDomain, MatchesIntersectionScoring) {
  const auto aliases = AliasTable::builtin();
  const auto& model_space = shell11();
  const Model model(tiny_model(model_space.size(), 8));
  PreciseConfig cfg;
  cfg.voxel_size = 0.2;
  cfg.tta = TtaConfig{{0.0, 1.0}, false};
  for (const char* target : {"s3dis-like", "vasad-like", "scannet-like", "shell11"}) {
    SCOPED_TRACE(target);
    const auto& space = builtin_label_space(target);
    std::vector<PointCloud> scenes{relabeled(random_cloud(300, 31), space, 1),
                                   relabeled(random_cloud(250, 32), space, 2)};
    expect_matches_oracle(model, model_space, scenes, space, aliases, cfg);
  }
}

TEST(CrossDomain, StairsAbsentFromModelAreNotScored) {
  const auto aliases = AliasTable::builtin();
  const auto& model_space = builtin_label_space("s3dis-like");  // has clutter, no stairs
  const auto& target = builtin_label_space("vasad-like");
  const Model model(tiny_model(model_space.size(), 9));
  std::vector<PointCloud> scenes{relabeled(random_cloud(300, 41), target, 3)};
  PreciseConfig cfg;
  cfg.voxel_size = 0.2;
  cfg.tta = TtaConfig::identity();
  const auto r = cross_domain_eval(model, model_space, scenes, target, aliases, cfg);
  EXPECT_FALSE(r.valid[*model_space.index_of("clutter")]);  // receives stairs and railing
  EXPECT_FALSE(r.valid[*model_space.index_of("table")]);    // nothing in vasad-like maps to it
  expect_matches_oracle(model, model_space, scenes, target, aliases, cfg);
}

}  // namespace
}  // namespace shellseg
