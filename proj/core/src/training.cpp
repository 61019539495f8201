#include "shellseg/training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "shellseg/error.hpp"
#include "shellseg/eval.hpp"
#include "shellseg/io.hpp"
#include "shellseg/losses.hpp"
#include "shellseg/rng.hpp"
#include "shellseg/sampling.hpp"

namespace shellseg {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kShuffleStream = 0x5C0FF1E;
constexpr std::uint64_t kSampleStream = 0x5A3B1E;
constexpr std::uint64_t kValStream = 0x7A11D;

void check_scenes(std::span<const PointCloud> scenes, const LabelSpace& space, const char* role) {
  for (const auto& pc : scenes) {
    if (!pc.labels) throw InvalidArgument(std::string(role) + " scene '" + pc.scene_id + "' has no labels");
    validate(pc, space.size());
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  validate(cfg.onecycle);
  validate(cfg.adamw);
  validate(cfg.augment);
  if (cfg.batch_size == 0) throw InvalidArgument("batch_size must be at least 1");
  if (cfg.early_stop.patience == 0) throw InvalidArgument("early stop patience must be at least 1");
  if (!(cfg.early_stop.min_delta >= 0.0)) throw InvalidArgument("early stop min_delta must be non-negative");
  if (!(cfg.max_lr >= 0.0) || !std::isfinite(cfg.max_lr)) throw InvalidArgument("max_lr must be finite and >= 0");
  if (!(cfg.voxel_size > 0.0)) throw InvalidArgument("voxel_size must be positive");
  if (cfg.crop_points == 0) throw InvalidArgument("crop_points must be at least 1");
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::kEarlyStop ? "early_stop" : "max_epochs";
}

std::string format_history(const TrainHistory& h) {
  std::string out = "epoch\tloss\tlr\tmIoU\tmAcc\tallAcc\n";
  for (std::size_t e = 0; e < h.epochs(); ++e) {
    out += std::to_string(e + 1) + "\t" + fmt(h.train_loss[e]) + "\t" + fmt(h.epoch_lr[e]) + "\t" +
           fmt(h.val_miou[e]) + "\t" + fmt(h.val_macc[e]) + "\t" + fmt(h.val_allacc[e]) + "\n";
  }
  out += "# stop " + std::string(to_string(h.stop_reason)) + "\n";
  return out;
}

bool EarlyStopper::update(double loss) {
  if (!seen_ || loss < best_ - cfg_.min_delta) {
    seen_ = true;
    best_ = loss;
    wait_ = 0;
  } else {
    ++wait_;
  }
  return wait_ >= cfg_.patience;
}

TrainSample prepare_sample(const PointCloud& scene, const TrainConfig& cfg, std::size_t channels,
                           std::uint64_t seed) {
  const PointCloud aug = apply_geometric(scene, cfg.augment.geometric, derive_seed(seed, {1}));
  const Matrix features = channels == 3 && aug.colors
                              ? apply_chromatic(aug, cfg.augment.chromatic, derive_seed(seed, {2}))
                              : model_features(aug, channels);

  const auto sample = voxel_grid_sample(aug.positions, cfg.voxel_size, derive_seed(seed, {3}));
  std::vector<Vec3> kept_pos;
  kept_pos.reserve(sample.kept.size());
  for (auto i : sample.kept) kept_pos.push_back(aug.positions[i]);
  const auto crop = sphere_crop(kept_pos, cfg.crop_points, derive_seed(seed, {4}));

  TrainSample out;
  out.positions.reserve(crop.size());
  out.labels.reserve(crop.size());
  out.features.resize(static_cast<Eigen::Index>(crop.size()), features.cols());
  for (std::size_t r = 0; r < crop.size(); ++r) {
    const auto src = sample.kept[crop[r]];
    out.positions.push_back(aug.positions[src]);
    out.labels.push_back((*aug.labels)[src]);
    out.features.row(static_cast<Eigen::Index>(r)) = features.row(src);
  }
  return out;
}

TrainResult train(Model model, std::span<const PointCloud> train_scenes,
                  std::span<const PointCloud> val_scenes, const LabelSpace& space, const TrainConfig& cfg,
                  const TrainOptions& options) {
  validate(cfg);
  if (train_scenes.empty()) throw InvalidArgument("train: no training scenes");
  if (val_scenes.empty()) throw InvalidArgument("train: no validation scenes");
  if (space.size() != model.num_classes()) {
    throw InvalidArgument("train: label space '" + space.name + "' has " + std::to_string(space.size()) +
                          " classes, model has " + std::to_string(model.num_classes()));
  }
  check_scenes(train_scenes, space, "training");
  check_scenes(val_scenes, space, "validation");

  const auto& mcfg = model.config();
  const std::size_t n = train_scenes.size();
  const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = cfg.max_epochs * steps_per_epoch;

  TrainResult result{std::move(model), {}, 0};
  Model& m = result.model;
  TrainHistory& h = result.history;
  AdamWState state = adamw_init(m.parameters());
  EarlyStopper stopper(cfg.early_stop);

  auto diverged = [&](std::size_t epoch, const std::string& scene) {
    if (options.divergence_dump) {
      write_checkpoint(Checkpoint{m, space.name, result.steps, cfg.max_lr}, options.divergence_dump->string());
    }
    throw NumericError("loss diverged at epoch " + std::to_string(epoch + 1) + ", step " +
                       std::to_string(result.steps) + ", scene '" + scene + "'");
  };

  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, {kShuffleStream, epoch}));
    shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    double lr = 0.0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      ParameterSet grads = m.parameters().zeros_like();
      std::size_t in_batch = 0;
      double batch_loss = 0.0;
      const std::size_t end = std::min(n, (b + 1) * cfg.batch_size);
      for (std::size_t slot = b * cfg.batch_size; slot < end; ++slot) {
        const auto scene_index = order[slot];
        const auto& scene = train_scenes[scene_index];
        const auto sample = prepare_sample(scene, cfg, mcfg.input_channels,
                                           derive_seed(cfg.seed, {kSampleStream, epoch, scene_index}));
        if (sample.positions.size() < mcfg.k_neighbors) continue;
        if (std::all_of(sample.labels.begin(), sample.labels.end(),
                        [](Label l) { return l == kIgnoreLabel; })) {
          continue;
        }
        const auto pass = forward_pass(m, sample.positions, sample.features);
        const auto loss = total_loss(pass.logits, sample.labels);
        if (!std::isfinite(loss.value) || !loss.grad.allFinite()) diverged(epoch, scene.scene_id);
        backward_accumulate(m, pass, loss.grad, grads);
        batch_loss += loss.value;
        ++in_batch;
      }
      lr = onecycle_lr(result.steps, total_steps, cfg.max_lr, cfg.onecycle);
      h.lr_trace.push_back(lr);
      if (in_batch > 0) {
        grads.scale(1.0 / static_cast<double>(in_batch));
        if (!grads.all_finite()) diverged(epoch, "batch " + std::to_string(b));
        adamw_step(m.parameters(), grads, state, lr, cfg.adamw);
        if (!m.parameters().all_finite()) diverged(epoch, "batch " + std::to_string(b));
        loss_sum += batch_loss;
        loss_count += in_batch;
      }
      ++result.steps;
    }
    if (loss_count == 0) {
      throw InvalidArgument("train: no training scene yields at least k_neighbors points after sampling");
    }

    const double epoch_loss = loss_sum / static_cast<double>(loss_count);
    const auto report = fast_evaluate(m, val_scenes, cfg.voxel_size, derive_seed(cfg.seed, {kValStream, epoch}));
    h.train_loss.push_back(epoch_loss);
    h.epoch_lr.push_back(lr);
    h.val_miou.push_back(report.miou);
    h.val_macc.push_back(report.macc);
    h.val_allacc.push_back(report.allacc);
    if (options.on_epoch) options.on_epoch(epoch, m, h);
    if (stopper.update(epoch_loss) && epoch + 1 < cfg.max_epochs) {
      h.stop_reason = StopReason::kEarlyStop;
      break;
    }
  }
  return result;
}

TrainResult finetune(const Checkpoint& pretrained, std::span<const PointCloud> train_scenes,
                     std::span<const PointCloud> val_scenes, const LabelSpace& target,
                     const TrainConfig& cfg, const TrainOptions& options) {
  const auto& builtins = builtin_label_spaces();
  for (const auto& s : builtins) {
    if (s.name == pretrained.label_space && s.size() != pretrained.model.num_classes()) {
      throw InvalidArgument("checkpoint label space '" + s.name + "' has " + std::to_string(s.size()) +
                            " classes but its head has " + std::to_string(pretrained.model.num_classes()));
    }
  }
  if (pretrained.train_max_lr > 0.0 && cfg.max_lr > pretrained.train_max_lr) {
    throw ConfigError("fine-tune max_lr " + fmt(cfg.max_lr) + " exceeds the pretraining peak " +
                      fmt(pretrained.train_max_lr));
  }
  validate(target);
  Model model = reinit_head(pretrained.model, target.size(), derive_seed(cfg.seed, {0x4EAD}));
  return train(std::move(model), train_scenes, val_scenes, target, cfg, options);
}

std::vector<PointCloud> load_scenes(const DatasetManifest& manifest, Split split, const LabelSpace& target,
                                    const AliasTable& aliases) {
  std::optional<TranslationMap> map;
  if (!manifest.label_space.empty() && manifest.label_space != target.name) {
    map = build_translation(resolve_label_space(manifest.label_space), target, aliases);
  }
  std::vector<PointCloud> out;
  for (const auto& entry : manifest.in_split(split)) {
    auto pc = load_pointcloud(manifest.resolve(entry));
    if (pc.scene_id.empty()) pc.scene_id = entry.scene_id;
    if (map && pc.labels) pc.labels = translate_labels(*pc.labels, *map);
    out.push_back(std::move(pc));
  }
  return out;
}

}  // namespace shellseg
