#include "shellseg/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "shellseg/error.hpp"
#include "shellseg/rng.hpp"
#include "shellseg/sampling.hpp"

namespace shellseg {

namespace {

Matrix gather_rows(const Matrix& m, std::span<const std::uint32_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  return out;
}

std::vector<Vec3> gather(std::span<const Vec3> pos, std::span<const std::uint32_t> rows) {
  std::vector<Vec3> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(pos[r]);
  return out;
}

Label argmax_row(const Matrix& logits, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < logits.cols(); ++c) {
    if (logits(row, c) > logits(row, best)) best = c;
  }
  return static_cast<Label>(best);
}

// Fragments too small for the neighbourhood size are folded into a
// neighbouring part so every point still gets exactly one forward pass.
std::vector<std::vector<std::uint32_t>> merge_small(std::vector<std::vector<std::uint32_t>> parts,
                                                    std::size_t min_size) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> carry;
  for (auto& p : parts) {
    carry.insert(carry.end(), p.begin(), p.end());
    if (carry.size() >= min_size) {
      out.push_back(std::move(carry));
      carry.clear();
    }
  }
  if (!carry.empty()) {
    if (out.empty()) throw InvalidArgument("precise_test: cloud has fewer points than k_neighbors");
    out.back().insert(out.back().end(), carry.begin(), carry.end());
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes, std::set<std::size_t> excluded)
    : n_(num_classes), excluded_(std::move(excluded)), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw InvalidArgument("confusion matrix needs at least one class");
  for (auto e : excluded_) {
    if (e >= n_) throw InvalidArgument("excluded class " + std::to_string(e) + " out of range");
  }
}

void ConfusionMatrix::accumulate(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) {
    throw InvalidArgument("accumulate: " + std::to_string(predicted.size()) + " predictions for " +
                          std::to_string(truth.size()) + " truth labels");
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kIgnoreLabel) continue;
    if (truth[i] >= n_ || predicted[i] >= n_) {
      throw InvalidArgument("accumulate: class index out of range at point " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kIgnoreLabel) continue;
    ++counts_[truth[i] * n_ + predicted[i]];
    ++total_;
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_ || other.excluded_ != excluded_) {
    throw InvalidArgument("merge: confusion matrices over different class sets");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

MetricsReport metrics(const ConfusionMatrix& conf) {
  if (conf.total() == 0) throw InvalidArgument("metrics: confusion matrix is empty");
  const auto n = conf.num_classes();
  MetricsReport r;
  r.iou.assign(n, 0.0);
  r.acc.assign(n, 0.0);
  r.valid.assign(n, false);
  std::uint64_t trace = 0;
  std::size_t valid = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < n; ++j) {
      row += conf.at(c, j);
      col += conf.at(j, c);
    }
    const auto tp = conf.at(c, c);
    trace += tp;
    const auto fn = row - tp, fp = col - tp;
    const auto uni = tp + fp + fn;
    if (uni > 0) r.iou[c] = static_cast<double>(tp) / static_cast<double>(uni);
    if (row > 0) r.acc[c] = static_cast<double>(tp) / static_cast<double>(row);
    r.valid[c] = uni > 0 && !conf.excluded().count(c);
    if (r.valid[c]) {
      r.miou += r.iou[c];
      r.macc += r.acc[c];
      ++valid;
    }
  }
  if (valid > 0) {
    r.miou /= static_cast<double>(valid);
    r.macc /= static_cast<double>(valid);
  }
  r.allacc = static_cast<double>(trace) / static_cast<double>(conf.total());
  return r;
}

MetricsReport score(std::span<const Label> predicted, std::span<const Label> truth, std::size_t num_classes,
                    const std::set<std::size_t>& excluded) {
  ConfusionMatrix conf(num_classes, excluded);
  conf.accumulate(predicted, truth);
  return metrics(conf);
}

std::string format_metrics_table(const MetricsReport& report, const LabelSpace& space) {
  if (space.size() != report.iou.size()) throw InvalidArgument("report and label space sizes differ");
  std::string out = "class\tIoU\tAcc\tvalid\n";
  for (std::size_t c = 0; c < space.size(); ++c) {
    out += space.classes[c] + "\t" + fmt(report.iou[c]) + "\t" + fmt(report.acc[c]) + "\t" +
           (report.valid[c] ? "yes" : "no") + "\n";
  }
  const std::string star = report.precise ? "*" : "";
  out += "mIoU" + star + "\tmAcc" + star + "\tallAcc" + star + "\n";
  out += fmt(report.miou) + "\t" + fmt(report.macc) + "\t" + fmt(report.allacc) + "\n";
  return out;
}

std::string metrics_json(const MetricsReport& report, const LabelSpace& space) {
  if (space.size() != report.iou.size()) throw InvalidArgument("report and label space sizes differ");
  nlohmann::ordered_json j;
  j["label_space"] = space.name;
  j["precise"] = report.precise;
  j["mIoU"] = report.miou;
  j["mAcc"] = report.macc;
  j["allAcc"] = report.allacc;
  auto& classes = j["classes"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < space.size(); ++c) {
    classes.push_back({{"name", space.classes[c]},
                       {"IoU", report.iou[c]},
                       {"Acc", report.acc[c]},
                       {"valid", static_cast<bool>(report.valid[c])}});
  }
  return j.dump(2) + "\n";
}

VoteBuffer::VoteBuffer(std::size_t points, std::size_t classes)
    : classes_(classes), votes_(points * classes, 0), coverage_(points, 0) {
  if (classes == 0) throw InvalidArgument("vote buffer needs at least one class");
}

void VoteBuffer::vote(std::size_t point, Label cls) {
  if (point >= points() || cls >= classes_) throw InvalidArgument("vote out of range");
  ++votes_[point * classes_ + cls];
  ++coverage_[point];
}

Label VoteBuffer::winner(std::size_t point) const {
  if (coverage_.at(point) == 0) throw std::logic_error("point " + std::to_string(point) + " received no vote");
  const auto* row = votes_.data() + point * classes_;
  return static_cast<Label>(std::max_element(row, row + classes_) - row);
}

double VoteBuffer::margin(std::size_t point) const {
  const auto w = winner(point);
  return static_cast<double>(votes(point, w)) / static_cast<double>(coverage_[point]);
}

std::vector<Label> VoteBuffer::winners() const {
  std::vector<Label> out(points());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = winner(i);
  return out;
}

PreciseResult precise_test(const Model& model, const PointCloud& pc, const PreciseConfig& cfg,
                           const std::set<std::size_t>& excluded) {
  if (pc.empty()) throw InvalidArgument("precise_test: empty cloud");
  if (!(cfg.voxel_size > 0.0)) throw InvalidArgument("precise_test: voxel size must be positive");
  if (cfg.fragment_budget == 0) throw InvalidArgument("precise_test: fragment budget must be positive");
  const std::size_t k = model.config().k_neighbors;
  const Matrix features = model_features(pc, model.config().input_channels);
  const auto instances = tta_instances(pc, cfg.tta);

  VoteBuffer votes(pc.size(), model.num_classes());
  for (const auto& inst : instances) {
    const auto& pos = inst.cloud.positions;
    const auto fragments =
        fragment_partition(pos, cfg.voxel_size, derive_seed(cfg.seed, {inst.transform_id}));
    std::vector<std::vector<std::uint32_t>> parts;
    for (const auto& f : fragments) {
      auto split = split_by_median(pos, f.indices, cfg.fragment_budget);
      for (auto& s : split) parts.push_back(std::move(s));
    }
    for (const auto& part : merge_small(std::move(parts), k)) {
      const Matrix logits = forward(model, gather(pos, part), gather_rows(features, part));
      for (std::size_t r = 0; r < part.size(); ++r) {
        votes.vote(part[r], argmax_row(logits, static_cast<Eigen::Index>(r)));
      }
    }
  }
  for (std::size_t i = 0; i < pc.size(); ++i) {
    if (votes.coverage(i) != instances.size()) {
      throw std::logic_error("precise_test: point " + std::to_string(i) + " voted " +
                             std::to_string(votes.coverage(i)) + " times");
    }
  }

  PreciseResult out{votes.winners(), std::move(votes), std::nullopt};
  if (pc.labels) {
    out.report = score(out.labels, *pc.labels, model.num_classes(), excluded);
    out.report->precise = true;
  }
  return out;
}

std::vector<Label> predict_subsample(const Model& model, const PointCloud& pc, double voxel_size,
                                     std::uint64_t seed) {
  if (pc.empty()) throw InvalidArgument("predict_subsample: empty cloud");
  const auto sample = voxel_grid_sample(pc.positions, voxel_size, seed);
  const Matrix features = model_features(pc, model.config().input_channels);
  const Matrix logits = forward(model, gather(pc.positions, sample.kept), gather_rows(features, sample.kept));
  std::vector<Label> kept_pred(sample.kept.size());
  for (std::size_t r = 0; r < kept_pred.size(); ++r) kept_pred[r] = argmax_row(logits, static_cast<Eigen::Index>(r));
  std::vector<Label> out(pc.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = kept_pred[sample.inverse[i]];
  return out;
}

MetricsReport fast_evaluate(const Model& model, std::span<const PointCloud> scenes, double voxel_size,
                            std::uint64_t seed) {
  ConfusionMatrix conf(model.num_classes());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const auto& pc = scenes[s];
    if (!pc.labels) throw InvalidArgument("fast_evaluate: scene '" + pc.scene_id + "' has no labels");
    conf.accumulate(predict_subsample(model, pc, voxel_size, derive_seed(seed, {s})), *pc.labels);
  }
  return metrics(conf);
}

MetricsReport cross_domain_eval(const Model& model, const LabelSpace& model_space,
                                std::span<const PointCloud> scenes, const LabelSpace& target_space,
                                const AliasTable& aliases, const PreciseConfig& cfg) {
  if (model_space.size() != model.num_classes()) {
    throw InvalidArgument("cross_domain_eval: model has " + std::to_string(model.num_classes()) +
                          " classes, label space '" + model_space.name + "' has " +
                          std::to_string(model_space.size()));
  }
  const auto map = build_translation(target_space, model_space, aliases);
  ConfusionMatrix conf(model.num_classes(), map.unscored());
  for (const auto& pc : scenes) {
    if (!pc.labels) throw InvalidArgument("cross_domain_eval: scene '" + pc.scene_id + "' has no labels");
    PointCloud bare = pc;  // truth lives in the target space, so score it here instead
    bare.labels.reset();
    const auto result = precise_test(model, bare, cfg);
    conf.accumulate(result.labels, translate_labels(*pc.labels, map));
  }
  auto report = metrics(conf);
  report.precise = true;
  return report;
}

}  // namespace shellseg
