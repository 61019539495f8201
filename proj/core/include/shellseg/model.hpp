#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "shellseg/pointcloud.hpp"

namespace shellseg {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  std::size_t input_channels = 3;  // per-point features; coordinates enter only as offsets
  std::vector<std::size_t> stage_widths{32, 64};
  std::size_t k_neighbors = 8;
  std::vector<double> pool_voxel_sizes{0.05, 0.10};  // one per stage, strictly increasing
  std::size_t num_classes = 11;
  std::uint64_t seed = 0;
  std::size_t group_size = 8;  // channels sharing one attention weight

  bool operator==(const ModelConfig&) const = default;
};

void validate(const ModelConfig& cfg);

// Named dense tensors. Biases are 1 x n rows.
struct ParameterSet {
  std::vector<std::string> names;
  std::vector<Matrix> tensors;

  std::size_t size() const { return tensors.size(); }
  std::size_t index(std::string_view name) const;
  Matrix& operator[](std::string_view name) { return tensors[index(name)]; }
  const Matrix& operator[](std::string_view name) const { return tensors[index(name)]; }
  std::size_t scalar_count() const;
  ParameterSet zeros_like() const;
  bool all_finite() const;

  void add(std::string name, Matrix value);
  // this += scale * other (same layout required).
  void axpy(double scale, const ParameterSet& other);
  void scale(double factor);
};

inline constexpr std::string_view kHeadWeight = "head.weight";
inline constexpr std::string_view kHeadBias = "head.bias";

// U-shaped point network. Each level runs grouped vector attention over the
// k nearest neighbours of every point, then mean-pools onto a coarser voxel
// grid. The decoder copies coarse features back to their member points,
// fuses them with the encoder skip, and a linear head yields class logits.
class Model {
 public:
  // Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from cfg.seed;
  // biases zero.
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  const ParameterSet& parameters() const { return params_; }
  ParameterSet& parameters() { return params_; }
  std::size_t num_classes() const { return cfg_.num_classes; }

  // Number of channels entering the head.
  std::size_t head_input_width() const { return cfg_.stage_widths.front(); }

  bool operator==(const Model& o) const;

 private:
  friend Model reinit_head(const Model&, std::size_t, std::uint64_t);
  ModelConfig cfg_;
  ParameterSet params_;
};

Model build_model(const ModelConfig& cfg);

// Intermediate values of one forward pass, kept for backward.
struct ForwardCache;

struct ForwardPass {
  Matrix logits;      // points x classes
  Matrix head_input;  // points x head_input_width (decoder output)
  std::shared_ptr<const ForwardCache> cache;
};

// Throws InvalidArgument when features.cols() != input_channels, when the
// cloud has fewer than k_neighbors points, or rows mismatch.
Matrix forward(const Model& model, std::span<const Vec3> positions, const Matrix& features);
ForwardPass forward_pass(const Model& model, std::span<const Vec3> positions, const Matrix& features);

// Adds d(loss)/d(parameter) into `grads` given d(loss)/d(logits).
void backward_accumulate(const Model& model, const ForwardPass& pass, const Matrix& dlogits,
                         ParameterSet& grads);
ParameterSet backward(const Model& model, std::span<const Vec3> positions, const Matrix& features,
                      const Matrix& dlogits);

// Copy of `model` whose head is freshly initialized for new_num_classes.
// Every other parameter is copied bit-exactly.
Model reinit_head(const Model& model, std::size_t new_num_classes, std::uint64_t seed);

// ------------------------------------------------------------ checkpoint --

struct Checkpoint {
  Model model;
  std::string label_space;
  std::uint64_t step = 0;
  double train_max_lr = 0.0;  // peak learning rate of the run that produced it
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// "SHSEGCKP" | u32 version | config block | label space | u64 step |
// f64 max lr | u32 tensor count | (name, rows, cols, f64 data)*. Little-endian.
std::string save_checkpoint(const Checkpoint& ckpt);
// Throws FormatError on corrupt, truncated or version-mismatched payloads.
Checkpoint load_checkpoint(std::string_view bytes);

void write_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace shellseg
