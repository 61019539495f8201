#include <benchmark/benchmark.h>

#include <random>

#include "shellseg/augment.hpp"
#include "shellseg/losses.hpp"
#include "shellseg/model.hpp"
#include "shellseg/sampling.hpp"
#include "shellseg/synth.hpp"

namespace {

using namespace shellseg;

std::vector<Vec3> uniform_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng) * 0.3);
  return pts;
}

void BM_KnnSelf(benchmark::State& state) {
  const auto pts = uniform_points(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(knn_self(pts, 8, true));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KnnSelf)->Arg(1 << 12)->Arg(1 << 15);

void BM_VoxelGridSample(benchmark::State& state) {
  const auto pts = uniform_points(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(voxel_grid_sample(pts, 0.05, 3));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_VoxelGridSample)->Arg(1 << 15)->Arg(1 << 18);

void BM_FragmentPartition(benchmark::State& state) {
  const auto pts = uniform_points(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(fragment_partition(pts, 0.05, 5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FragmentPartition)->Arg(1 << 15)->Arg(1 << 18);

struct Batch {
  Model model;
  std::vector<Vec3> positions;
  Matrix features;
  std::vector<Label> labels;
};

Batch make_batch(std::size_t n) {
  ModelConfig cfg;
  cfg.stage_widths = {16, 32};
  cfg.pool_voxel_sizes = {0.25, 0.5};
  cfg.group_size = 4;
  auto spec = shell_share_preset();
  spec.density = 120;
  auto scene = generate_scene(spec, 7);
  const auto keep = sphere_crop(scene.positions, n, 8);
  Batch b{Model(cfg), {}, Matrix(), {}};
  PointCloud crop;
  crop.colors.emplace();
  for (auto i : keep) {
    crop.positions.push_back(scene.positions[i]);
    crop.colors->push_back((*scene.colors)[i]);
    b.labels.push_back((*scene.labels)[i]);
  }
  b.positions = crop.positions;
  b.features = model_features(crop, 3);
  return b;
}

void BM_Forward(benchmark::State& state) {
  const auto b = make_batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward(b.model, b.positions, b.features));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const auto b = make_batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const auto pass = forward_pass(b.model, b.positions, b.features);
    const auto loss = total_loss(pass.logits, b.labels);
    auto grads = b.model.parameters().zeros_like();
    backward_accumulate(b.model, pass, loss.grad, grads);
    benchmark::DoNotOptimize(grads);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_TotalLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  Matrix logits(static_cast<Eigen::Index>(n), 11);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = g(rng);
  std::vector<Label> labels(n);
  for (auto& l : labels) l = static_cast<Label>(rng() % 11);
  for (auto _ : state) benchmark::DoNotOptimize(total_loss(logits, labels));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TotalLoss)->Arg(3000)->Arg(30000);

}  // namespace

BENCHMARK_MAIN();
