#include "nodegae/diffcore/adam.hpp"

#include <algorithm>
#include <cmath>

#include "nodegae/errors.hpp"

namespace nodegae {

double AdamState::lr_at(std::size_t step) const {
  if (config.warmup_steps == 0) return config.base_lr;
  const double frac = static_cast<double>(step) / static_cast<double>(config.warmup_steps);
  return config.base_lr * std::min(1.0, frac);
}

double adam_step(std::span<DiffTensor> params, AdamState& state) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw ContractError("adam_step: parameter " + std::to_string(i) + " has no gradient");
    }
  }
  if (state.first_moment.empty()) {
    for (const DiffTensor& p : params) {
      state.first_moment.emplace_back(p.numel(), 0.0);
      state.second_moment.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ContractError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                        " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].numel() || state.second_moment[i].size() != params[i].numel()) {
      throw ContractError("adam_step: moment buffer shape mismatch for parameter " + std::to_string(i));
    }
  }

  double sq = 0.0;
  for (const DiffTensor& p : params) {
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  const AdamConfig& cfg = state.config;
  const double clip = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double lr = state.effective_lr();
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].mutable_data();
    auto grad = params[i].mutable_grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j] * clip;
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      value[j] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    params[i].zero_grad();
  }
  return norm;
}

}  // namespace nodegae
