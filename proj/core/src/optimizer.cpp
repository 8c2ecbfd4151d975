#include "tprnn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace tprnn {

NadamConfig single_task_preset() { return NadamConfig{0.008, 0.6, 0.4, 1e-8}; }

NadamConfig all_tasks_preset() { return NadamConfig{0.001, 0.9, 0.999, 1e-8}; }

void NadamState::init(const std::vector<Param*>& params) {
  step_count = 0;
  m.clear();
  v.clear();
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Param* p : params) {
    m.emplace_back(p->value.dims());
    v.emplace_back(p->value.dims());
  }
}

void NadamState::reset() {
  step_count = 0;
  for (Tensor& t : m) std::fill(t.data(), t.data() + t.size(), 0.0);
  for (Tensor& t : v) std::fill(t.data(), t.data() + t.size(), 0.0);
}

void nadam_step(const std::vector<Param*>& params, NadamState& state,
                const NadamConfig& cfg, double lr) {
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("nadam_step: state not initialized for params");
  }
  for (const Param* p : params) {
    if (!p->grad.all_finite()) {
      throw NonFiniteError("non-finite gradient in parameter " + p->name);
    }
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Param& p = *params[pi];
    if (!p.trainable) continue;
    Tensor& m = state.m[pi];
    Tensor& v = state.v[pi];
    for (int i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      const double update = cfg.beta1 * mh + (1.0 - cfg.beta1) * g / bc1;
      p.value[i] -= lr * update / (std::sqrt(vh) + cfg.eps);
    }
    if (!p.value.all_finite()) {
      throw NonFiniteError("non-finite parameter after update: " + p.name);
    }
  }
}

double effective_lr(Schedule& s, long step, double best_val_loss) {
  if (step < 1) throw std::invalid_argument("effective_lr: step must be >= 1");
  if (!s.halved && best_val_loss < s.halve_threshold) s.halved = true;
  double lr = s.base_lr;
  if (s.halved) lr *= 0.5;
  if (step <= s.warmup_steps) lr *= s.warmup_factor;
  return lr;
}

NanAction nan_policy(long step, int warmup_steps) {
  return step <= warmup_steps ? NanAction::Reinitialize : NanAction::Abort;
}

}  // namespace tprnn
