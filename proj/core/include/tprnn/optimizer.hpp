#pragma once

#include <vector>

#include "tprnn/autodiff.hpp"

namespace tprnn {

struct NadamConfig {
  double lr = 0.008;
  double beta1 = 0.6;
  double beta2 = 0.4;
  double eps = 1e-8;
};

/// Single-task preset: lr 0.008, beta1 0.6, beta2 0.4 (batch 128).
NadamConfig single_task_preset();
/// All-tasks preset: lr 0.001, beta1 0.9, beta2 0.999 (batch 32).
NadamConfig all_tasks_preset();

/// First and second moment accumulators, one tensor per parameter in the
/// canonical order.
struct NadamState {
  long step_count = 0;
  std::vector<Tensor> m, v;

  void init(const std::vector<Param*>& params);
  void reset();
};

/// One Nadam update from the gradients currently in Param::grad:
///   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
///   mh = m/(1-b1^t),       vh = v/(1-b2^t)
///   theta -= lr * (b1*mh + (1-b1)*g/(1-b1^t)) / (sqrt(vh) + eps)
/// Throws NonFiniteError on non-finite gradients (the caller maps this
/// onto the divergence policy).
void nadam_step(const std::vector<Param*>& params, NadamState& state,
                const NadamConfig& cfg, double lr);

/// Warm-up at a tenth of the learning rate for the first 50 steps, then
/// the base rate, permanently halved once the validation loss has been
/// below the threshold.
struct Schedule {
  double base_lr = 0.008;
  int warmup_steps = 50;
  double warmup_factor = 0.1;
  double halve_threshold = 0.1;
  bool halved = false;
};

/// Effective rate for `step` (1-based); latches the halving as a side
/// effect once best_val_loss crosses the threshold.
double effective_lr(Schedule& s, long step, double best_val_loss);

enum class NanAction { Reinitialize, Abort };

/// Non-finite values during warm-up trigger a full reinitialization with
/// a fresh seed; afterwards they abort the run.
NanAction nan_policy(long step, int warmup_steps);

}  // namespace tprnn
