#include <fstream>
#include <optional>
#include <sstream>

#include "binary.hpp"
#include "shellseg/error.hpp"
#include "shellseg/model.hpp"

namespace shellseg {

namespace {

constexpr std::string_view kMagic = "SHSEGCKP";

using detail::ByteReader;
using detail::ByteWriter;

}  // namespace

std::string save_checkpoint(const Checkpoint& ckpt) {
  const auto& cfg = ckpt.model.config();
  const auto& params = ckpt.model.parameters();
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put(kCheckpointVersion);

  w.put(static_cast<std::uint32_t>(cfg.input_channels));
  w.put(static_cast<std::uint32_t>(cfg.stage_widths.size()));
  for (auto width : cfg.stage_widths) w.put(static_cast<std::uint32_t>(width));
  for (auto voxel : cfg.pool_voxel_sizes) w.put(voxel);
  w.put(static_cast<std::uint32_t>(cfg.k_neighbors));
  w.put(static_cast<std::uint32_t>(cfg.num_classes));
  w.put(static_cast<std::uint32_t>(cfg.group_size));
  w.put(cfg.seed);

  w.put_string(ckpt.label_space);
  w.put(ckpt.step);
  w.put(ckpt.train_max_lr);

  w.put(static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = params.tensors[i];
    w.put_string(params.names[i]);
    w.put(static_cast<std::uint32_t>(t.rows()));
    w.put(static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index e = 0; e < t.size(); ++e) w.put(t.data()[e]);
  }
  return w.take();
}

Checkpoint load_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.get_bytes(kMagic.size(), "magic") != kMagic) {
    throw FormatError("not a checkpoint (bad magic)", 0);
  }
  const auto version_offset = r.offset();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " does not match supported " +
                          std::to_string(kCheckpointVersion),
                      version_offset);
  }

  ModelConfig cfg;
  cfg.input_channels = r.get<std::uint32_t>("input channels");
  const auto stages = r.get<std::uint32_t>("stage count");
  if (stages == 0 || stages > 16) throw FormatError("implausible stage count", r.offset() - 4);
  cfg.stage_widths.resize(stages);
  cfg.pool_voxel_sizes.resize(stages);
  for (auto& width : cfg.stage_widths) width = r.get<std::uint32_t>("stage width");
  for (auto& voxel : cfg.pool_voxel_sizes) voxel = r.get<double>("pool voxel size");
  cfg.k_neighbors = r.get<std::uint32_t>("k neighbors");
  cfg.num_classes = r.get<std::uint32_t>("class count");
  cfg.group_size = r.get<std::uint32_t>("group size");
  cfg.seed = r.get<std::uint64_t>("seed");
  const auto config_end = r.offset();

  std::string label_space = r.get_string("label space");
  const auto step = r.get<std::uint64_t>("step");
  const auto max_lr = r.get<double>("max lr");

  std::optional<Model> model;
  try {
    model.emplace(cfg);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid model configuration: ") + e.what(), config_end);
  }
  auto& params = model->parameters();
  const auto count_offset = r.offset();
  const auto count = r.get<std::uint32_t>("tensor count");
  if (count != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                          std::to_string(params.size()),
                      count_offset);
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto tensor_offset = r.offset();
    const auto name = r.get_string("tensor name");
    const auto rows = r.get<std::uint32_t>("tensor rows");
    const auto cols = r.get<std::uint32_t>("tensor cols");
    if (name != params.names[i]) {
      throw FormatError("unexpected tensor '" + name + "', expected '" + params.names[i] + "'",
                        tensor_offset);
    }
    auto& t = params.tensors[i];
    if (rows != t.rows() || cols != t.cols()) {
      throw FormatError("tensor '" + name + "' has wrong shape", tensor_offset);
    }
    r.require(static_cast<std::size_t>(rows) * cols * sizeof(double), "tensor data");
    for (Eigen::Index e = 0; e < t.size(); ++e) t.data()[e] = r.get<double>("tensor data");
  }
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint", r.offset());
  if (!params.all_finite()) throw FormatError("checkpoint holds non-finite parameters", count_offset);
  return Checkpoint{std::move(*model), std::move(label_space), step, max_lr};
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const auto bytes = save_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on '" + path + "'");
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_checkpoint(ss.str());
}

}  // namespace shellseg
