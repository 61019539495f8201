#include "shellseg/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shellseg/error.hpp"

namespace shellseg {

namespace {

double cosine_anneal(double start, double end, double pct) {
  return end + (start - end) / 2.0 * (1.0 + std::cos(std::numbers::pi * pct));
}

void check_layout(const ParameterSet& a, const ParameterSet& b, const char* what) {
  if (a.size() != b.size()) throw InvalidArgument(std::string("adamw_step: ") + what + " tensor count mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.tensors[i].rows() != b.tensors[i].rows() || a.tensors[i].cols() != b.tensors[i].cols()) {
      throw InvalidArgument(std::string("adamw_step: ") + what + " shape mismatch at '" + a.names[i] + "'");
    }
  }
}

}  // namespace

void validate(const OneCycleConfig& cfg) {
  if (!(cfg.warmup_fraction > 0.0 && cfg.warmup_fraction < 1.0)) {
    throw InvalidArgument("onecycle warmup fraction must lie in (0, 1)");
  }
  if (!(cfg.initial_divisor > 1.0)) throw InvalidArgument("onecycle initial divisor must exceed 1");
  if (!(cfg.final_divisor > 1.0)) throw InvalidArgument("onecycle final divisor must exceed 1");
}

void validate(const AdamWConfig& cfg) {
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) throw InvalidArgument("adamw beta1 must lie in [0, 1)");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) throw InvalidArgument("adamw beta2 must lie in [0, 1)");
  if (!(cfg.epsilon > 0.0)) throw InvalidArgument("adamw epsilon must be positive");
  if (!(cfg.weight_decay >= 0.0)) throw InvalidArgument("adamw weight decay must be non-negative");
}

std::size_t onecycle_warmup_end(std::size_t total_steps, const OneCycleConfig& cfg) {
  if (total_steps <= 1) return 0;
  const auto last = static_cast<double>(total_steps - 1);
  const auto w = static_cast<std::size_t>(std::llround(cfg.warmup_fraction * last));
  return std::clamp<std::size_t>(w, 1, total_steps - 1);
}

double onecycle_lr(std::size_t step, std::size_t total_steps, double max_lr, const OneCycleConfig& cfg) {
  if (total_steps == 0 || step >= total_steps) {
    throw InvalidArgument("onecycle_lr: step " + std::to_string(step) + " outside [0, " +
                          std::to_string(total_steps) + ")");
  }
  const double initial = max_lr / cfg.initial_divisor;
  const double final = max_lr / cfg.final_divisor;
  if (total_steps == 1) return max_lr;
  const auto warm = onecycle_warmup_end(total_steps, cfg);
  if (step == 0) return initial;
  if (step <= warm) {
    return step == warm ? max_lr
                        : cosine_anneal(initial, max_lr, static_cast<double>(step) / static_cast<double>(warm));
  }
  const auto last = total_steps - 1;
  if (step == last) return final;
  return cosine_anneal(max_lr, final,
                       static_cast<double>(step - warm) / static_cast<double>(last - warm));
}

AdamWState adamw_init(const ParameterSet& params) {
  return AdamWState{0, params.zeros_like(), params.zeros_like()};
}

void adamw_step(ParameterSet& params, const ParameterSet& grads, AdamWState& state, double lr,
                const AdamWConfig& cfg) {
  check_layout(params, grads, "gradient");
  check_layout(params, state.m, "first moment");
  check_layout(params, state.v, "second moment");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.tensors[i].array();
    const auto g = grads.tensors[i].array();
    auto m = state.m.tensors[i].array();
    auto v = state.v.tensors[i].array();
    p *= 1.0 - lr * cfg.weight_decay;
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    p -= lr * (m / bc1) / ((v / bc2).sqrt() + cfg.epsilon);
  }
}

}  // namespace shellseg
