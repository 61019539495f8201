#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "shellseg/augment.hpp"
#include "shellseg/labelspace.hpp"
#include "shellseg/model.hpp"
#include "shellseg/pointcloud.hpp"

namespace shellseg {

// Counts indexed (true class, predicted class). Points whose truth is the
// ignore label are skipped.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes, std::set<std::size_t> excluded = {});

  std::size_t num_classes() const { return n_; }
  const std::set<std::size_t>& excluded() const { return excluded_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  std::uint64_t total() const { return total_; }

  // Throws InvalidArgument on length mismatch or out-of-range indices
  // (including an ignored prediction for a scored point).
  void accumulate(std::span<const Label> predicted, std::span<const Label> truth);
  // Requires equal class count and excluded set.
  void merge(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_;
  std::set<std::size_t> excluded_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct MetricsReport {
  std::vector<double> iou, acc;
  std::vector<bool> valid;  // false when absent (zero union) or excluded
  double miou = 0.0, macc = 0.0, allacc = 0.0;
  bool precise = false;  // produced with fragment voting + TTA

  bool operator==(const MetricsReport&) const = default;
};

// Throws InvalidArgument on an empty matrix.
MetricsReport metrics(const ConfusionMatrix& conf);

MetricsReport score(std::span<const Label> predicted, std::span<const Label> truth, std::size_t num_classes,
                    const std::set<std::size_t>& excluded = {});

// Per-class rows (class, IoU, Acc, valid) and a summary row. Precise reports
// mark the summary with '*'.
std::string format_metrics_table(const MetricsReport& report, const LabelSpace& space);
std::string metrics_json(const MetricsReport& report, const LabelSpace& space);

class VoteBuffer {
 public:
  VoteBuffer(std::size_t points, std::size_t classes);

  std::size_t points() const { return coverage_.size(); }
  std::size_t classes() const { return classes_; }
  void vote(std::size_t point, Label cls);
  std::uint32_t votes(std::size_t point, Label cls) const { return votes_[point * classes_ + cls]; }
  std::uint32_t coverage(std::size_t point) const { return coverage_[point]; }
  // Most voted class, ties to the lowest index. Throws on an unvoted point.
  Label winner(std::size_t point) const;
  // Share of the winner's votes in the point's coverage.
  double margin(std::size_t point) const;
  std::vector<Label> winners() const;

 private:
  std::size_t classes_;
  std::vector<std::uint32_t> votes_;
  std::vector<std::uint32_t> coverage_;
};

struct PreciseConfig {
  double voxel_size = 0.025;
  TtaConfig tta;
  std::uint64_t seed = 0;
  std::size_t fragment_budget = 200000;
};

struct PreciseResult {
  std::vector<Label> labels;
  VoteBuffer votes;
  std::optional<MetricsReport> report;  // when the cloud carries labels
};

// Fragment prediction with class voting over every TTA instance. `excluded`
// feeds the report's validity flags.
PreciseResult precise_test(const Model& model, const PointCloud& pc, const PreciseConfig& cfg,
                           const std::set<std::size_t>& excluded = {});

// Forward on one voxel subsample; every point takes the prediction of the
// representative of its voxel.
std::vector<Label> predict_subsample(const Model& model, const PointCloud& pc, double voxel_size,
                                     std::uint64_t seed);

// predict_subsample over labeled scenes, scored jointly.
MetricsReport fast_evaluate(const Model& model, std::span<const PointCloud> scenes, double voxel_size,
                            std::uint64_t seed);

// Translates each scene's truth from `target_space` into `model_space` and
// scores precise_test over all scenes jointly. Model classes that receive
// unmatched target classes, or that no target class maps to, are not scored.
MetricsReport cross_domain_eval(const Model& model, const LabelSpace& model_space,
                                std::span<const PointCloud> scenes, const LabelSpace& target_space,
                                const AliasTable& aliases, const PreciseConfig& cfg);

}  // namespace shellseg
