#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nodegae/diffcore/tensor.hpp"

namespace nodegae {

struct AdamConfig {
  double base_lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t warmup_steps = 0;
  // Global-norm clip threshold; <= 0 disables clipping.
  double clip_norm = 1.0;
};

/// Adam with bias correction and a linear warmup that then stays at base_lr.
struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::size_t step_count = 0;

  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : config(cfg) {}

  /// base_lr * min(1, step / warmup_steps), or base_lr without warmup.
  double lr_at(std::size_t step) const;
  double effective_lr() const { return lr_at(step_count); }
};

/// Applies one update to every parameter, then zeroes their grads.
/// Throws ContractError if a parameter has no populated grad.
/// Returns the pre-clip global gradient norm.
double adam_step(std::span<DiffTensor> params, AdamState& state);

}  // namespace nodegae
