#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shellseg/augment.hpp"
#include "shellseg/labelspace.hpp"
#include "shellseg/manifest.hpp"
#include "shellseg/model.hpp"
#include "shellseg/optim.hpp"
#include "shellseg/pointcloud.hpp"

namespace shellseg {

struct EarlyStopConfig {
  std::size_t patience = 10;  // epochs without improvement before stopping
  double min_delta = 1e-4;    // on the epoch-mean training loss
};

struct TrainConfig {
  std::size_t max_epochs = 100;
  EarlyStopConfig early_stop;
  std::size_t batch_size = 2;
  double max_lr = 0.006;
  OneCycleConfig onecycle;
  AdamWConfig adamw;
  std::uint64_t seed = 0;
  double voxel_size = 0.025;
  std::size_t crop_points = 100000;
  AugmentConfig augment;
};

void validate(const TrainConfig& cfg);

enum class StopReason { kMaxEpochs, kEarlyStop };
std::string_view to_string(StopReason reason);

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_miou, val_macc, val_allacc;
  std::vector<double> epoch_lr;  // rate of the last step of each epoch
  std::vector<double> lr_trace;  // every optimizer step
  StopReason stop_reason = StopReason::kMaxEpochs;

  std::size_t epochs() const { return train_loss.size(); }
  bool operator==(const TrainHistory&) const = default;
};

// Tab-separated: epoch, loss, lr, mIoU, mAcc, allAcc; one row per epoch,
// then a "# stop <reason>" line.
std::string format_history(const TrainHistory& history);

class EarlyStopper {
 public:
  explicit EarlyStopper(EarlyStopConfig cfg) : cfg_(cfg) {}

  // Records one epoch loss; true once `patience` epochs in a row failed to
  // beat the best loss by more than min_delta.
  bool update(double loss);
  double best() const { return best_; }
  std::size_t wait() const { return wait_; }

 private:
  EarlyStopConfig cfg_;
  bool seen_ = false;
  double best_ = 0.0;
  std::size_t wait_ = 0;
};

struct TrainSample {
  std::vector<Vec3> positions;
  Matrix features;
  std::vector<Label> labels;
};

// Augment, voxel-sample, then sphere-crop one labeled scene.
TrainSample prepare_sample(const PointCloud& scene, const TrainConfig& cfg, std::size_t channels,
                           std::uint64_t seed);

struct TrainOptions {
  // Called after each epoch's validation pass.
  std::function<void(std::size_t epoch, const Model&, const TrainHistory&)> on_epoch;
  // Where to write a checkpoint of the last finite state if the loss diverges.
  std::optional<std::filesystem::path> divergence_dump;
};

struct TrainResult {
  Model model;
  TrainHistory history;
  std::uint64_t steps = 0;
};

// Scenes must carry labels in `space`, whose size must match the model.
// Throws NumericError when a loss or gradient turns non-finite.
TrainResult train(Model model, std::span<const PointCloud> train_scenes,
                  std::span<const PointCloud> val_scenes, const LabelSpace& space, const TrainConfig& cfg,
                  const TrainOptions& options = {});

// Replaces the head with a fresh one sized for `target`, then trains the
// whole network. cfg.max_lr may not exceed the checkpoint's peak rate.
TrainResult finetune(const Checkpoint& pretrained, std::span<const PointCloud> train_scenes,
                     std::span<const PointCloud> val_scenes, const LabelSpace& target,
                     const TrainConfig& cfg, const TrainOptions& options = {});

// Loads the scenes of one split. When the manifest names a label space
// other than `target`, labels are translated on load.
std::vector<PointCloud> load_scenes(const DatasetManifest& manifest, Split split, const LabelSpace& target,
                                    const AliasTable& aliases = AliasTable::builtin());

}  // namespace shellseg
