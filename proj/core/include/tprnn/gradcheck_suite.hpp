#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tprnn {

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Central-difference verification of every differentiable primitive in
/// isolation (tolerance 1e-6) plus the full model forward at tiny dims
/// (entity 4, relation 3, hidden 6, vocab 8, 3-sentence story; tolerance
/// 1e-4). Deterministic for a fixed seed.
std::vector<GradCheckCase> run_gradient_checks(double eps = 1e-5,
                                               uint64_t seed = 7);

}  // namespace tprnn
