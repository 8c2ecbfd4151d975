#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tprnn/tensor.hpp"

namespace tprnn {

/// A trainable tensor with its gradient accumulator. Parameters live
/// outside any tape; tapes bind them as leaves and accumulate into
/// `grad` during backward().
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.dims()) {}
};

void zero_grads(const std::vector<Param*>& params);

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while the tape
/// is alive.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
};

/// Reverse-mode tape over tensor_core operations. Nodes are appended in
/// topological order by construction; one backward() sweep visits each
/// node exactly once, in reverse. A tape is single-threaded; distinct
/// tapes are independent.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Param& p);
  Var constant(Tensor value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double c);
  Var hadamard(Var a, Var b);
  Var dot(Var a, Var b);

  Var matvec(Var W, Var x);
  Var matmul(Var A, Var B);
  Var affine(Var W, Var x, Var b);  // W*x + b

  Var outer2(Var a, Var b);
  Var outer3(Var a, Var b, Var c);
  Var unbind2(Var T, Var u);
  Var unbind3(Var F, Var e, Var r);

  Var tanh(Var x);
  Var sum(Var x);
  Var sum_rows(Var M);

  Var layer_norm(Var x, Var gamma, Var beta, double epsilon);
  Var softmax_xent(Var logits, int target);
  Var embedding_gather(Var table, const std::vector<int>& ids);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be scalar
  /// (order-1, size 1). Trainable parameter gradients accumulate into
  /// their Param::grad; call zero_grads first if fresh gradients are
  /// wanted.
  void backward(Var loss);

  const Tensor& value(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  const Tensor& grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].grad; }
  double scalar(Var v) const { return value(v).at(0); }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> backprop;  // empty for leaves/constants
    Param* param = nullptr;
  };

  std::vector<Node> nodes_;

  Var push(Tensor value, std::function<void(Tape&)> backprop, Param* p = nullptr);
  void own(Var v) const;
  Tensor& g(int id) { return nodes_[static_cast<size_t>(id)].grad; }
  const Tensor& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_index = -1;
};

/// Central-difference check of tape gradients. `build` must construct
/// the loss graph on the given tape from the current parameter values,
/// deterministically. Relative error falls back to absolute where the
/// analytic gradient is below 1e-8.
GradCheckReport grad_check(const std::function<Var(Tape&)>& build,
                           const std::vector<Param*>& params, double eps);

}  // namespace tprnn
