#pragma once

#include <cstddef>
#include <cstdint>

#include "shellseg/model.hpp"

namespace shellseg {

struct OneCycleConfig {
  double warmup_fraction = 0.05;
  double initial_divisor = 10.0;
  double final_divisor = 1000.0;
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.05;
};

void validate(const OneCycleConfig& cfg);
void validate(const AdamWConfig& cfg);

// Last step of the warmup phase for a schedule of total_steps.
std::size_t onecycle_warmup_end(std::size_t total_steps, const OneCycleConfig& cfg);

// Cosine rise from max_lr / initial_divisor to max_lr at the warmup end, then
// cosine descent to max_lr / final_divisor at total_steps - 1.
double onecycle_lr(std::size_t step, std::size_t total_steps, double max_lr, const OneCycleConfig& cfg);

struct AdamWState {
  std::uint64_t step = 0;
  ParameterSet m;
  ParameterSet v;
};

AdamWState adamw_init(const ParameterSet& params);

// One decoupled-weight-decay update in place. Throws InvalidArgument on
// layout mismatch between params, grads and state.
void adamw_step(ParameterSet& params, const ParameterSet& grads, AdamWState& state, double lr,
                const AdamWConfig& cfg);

}  // namespace shellseg
