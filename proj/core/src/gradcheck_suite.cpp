#include "tprnn/gradcheck_suite.hpp"

#include <random>

#include "tprnn/autodiff.hpp"
#include "tprnn/model.hpp"

namespace tprnn {

namespace {

Tensor random_tensor(std::vector<int> dims, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(dims));
  for (int i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

// Scalarizes an op output against fixed random weights so every output
// element carries a distinct gradient path.
Var weighted(Tape& t, Var out, const Tensor& w) {
  return t.sum(t.hadamard(out, t.constant(w)));
}

}  // namespace

std::vector<GradCheckCase> run_gradient_checks(double eps, uint64_t seed) {
  std::vector<GradCheckCase> results;
  std::mt19937_64 rng(seed);

  auto check = [&](const std::string& name, double tol,
                   std::vector<Param*> params,
                   const std::function<Var(Tape&)>& build) {
    const GradCheckReport rep = grad_check(build, params, eps);
    results.push_back({name, rep.max_rel_err, tol, rep.max_rel_err < tol});
  };

  const double tol = 1e-6;

  {
    Param a("a", random_tensor({4, 3}, rng)), b("b", random_tensor({4, 3}, rng));
    const Tensor w = random_tensor({4, 3}, rng);
    check("add", tol, {&a, &b}, [&](Tape& t) {
      return weighted(t, t.add(t.leaf(a), t.leaf(b)), w);
    });
  }
  {
    Param a("a", random_tensor({5}, rng)), b("b", random_tensor({5}, rng));
    const Tensor w = random_tensor({5}, rng);
    check("sub", tol, {&a, &b}, [&](Tape& t) {
      return weighted(t, t.sub(t.leaf(a), t.leaf(b)), w);
    });
  }
  {
    Param a("a", random_tensor({2, 3, 4}, rng));
    const Tensor w = random_tensor({2, 3, 4}, rng);
    check("scale", tol, {&a}, [&](Tape& t) {
      return weighted(t, t.scale(t.leaf(a), -1.7), w);
    });
  }
  {
    Param a("a", random_tensor({6}, rng)), b("b", random_tensor({6}, rng));
    const Tensor w = random_tensor({6}, rng);
    check("hadamard", tol, {&a, &b}, [&](Tape& t) {
      return weighted(t, t.hadamard(t.leaf(a), t.leaf(b)), w);
    });
  }
  {
    Param a("a", random_tensor({7}, rng)), b("b", random_tensor({7}, rng));
    check("dot", tol, {&a, &b},
          [&](Tape& t) { return t.dot(t.leaf(a), t.leaf(b)); });
  }
  {
    Param W("W", random_tensor({4, 6}, rng)), x("x", random_tensor({6}, rng));
    const Tensor w = random_tensor({4}, rng);
    check("matvec", tol, {&W, &x}, [&](Tape& t) {
      return weighted(t, t.matvec(t.leaf(W), t.leaf(x)), w);
    });
  }
  {
    Param A("A", random_tensor({3, 4}, rng)), B("B", random_tensor({4, 5}, rng));
    const Tensor w = random_tensor({3, 5}, rng);
    check("matmul", tol, {&A, &B}, [&](Tape& t) {
      return weighted(t, t.matmul(t.leaf(A), t.leaf(B)), w);
    });
  }
  {
    Param W("W", random_tensor({4, 6}, rng)), x("x", random_tensor({6}, rng)),
        b("b", random_tensor({4}, rng));
    const Tensor w = random_tensor({4}, rng);
    check("affine", tol, {&W, &x, &b}, [&](Tape& t) {
      return weighted(t, t.affine(t.leaf(W), t.leaf(x), t.leaf(b)), w);
    });
  }
  {
    Param a("a", random_tensor({4}, rng)), b("b", random_tensor({5}, rng));
    const Tensor w = random_tensor({4, 5}, rng);
    check("outer2", tol, {&a, &b}, [&](Tape& t) {
      return weighted(t, t.outer2(t.leaf(a), t.leaf(b)), w);
    });
  }
  {
    Param a("a", random_tensor({3}, rng)), b("b", random_tensor({4}, rng)),
        c("c", random_tensor({5}, rng));
    const Tensor w = random_tensor({3, 4, 5}, rng);
    check("outer3", tol, {&a, &b, &c}, [&](Tape& t) {
      return weighted(t, t.outer3(t.leaf(a), t.leaf(b), t.leaf(c)), w);
    });
  }
  {
    Param T("T", random_tensor({4, 6}, rng)), u("u", random_tensor({6}, rng));
    const Tensor w = random_tensor({4}, rng);
    check("unbind2", tol, {&T, &u}, [&](Tape& t) {
      return weighted(t, t.unbind2(t.leaf(T), t.leaf(u)), w);
    });
  }
  {
    Param F("F", random_tensor({3, 4, 5}, rng)), e("e", random_tensor({3}, rng)),
        r("r", random_tensor({4}, rng));
    const Tensor w = random_tensor({5}, rng);
    check("unbind3", tol, {&F, &e, &r}, [&](Tape& t) {
      return weighted(t, t.unbind3(t.leaf(F), t.leaf(e), t.leaf(r)), w);
    });
  }
  {
    Param x("x", random_tensor({6}, rng));
    const Tensor w = random_tensor({6}, rng);
    check("tanh", tol, {&x},
          [&](Tape& t) { return weighted(t, t.tanh(t.leaf(x)), w); });
  }
  {
    Param x("x", random_tensor({3, 4}, rng));
    check("sum", tol, {&x}, [&](Tape& t) { return t.sum(t.leaf(x)); });
  }
  {
    Param x("x", random_tensor({5, 3}, rng));
    const Tensor w = random_tensor({3}, rng);
    check("sum_rows", tol, {&x},
          [&](Tape& t) { return weighted(t, t.sum_rows(t.leaf(x)), w); });
  }
  {
    Param x("x", random_tensor({5}, rng));
    Param gamma("gamma", Tensor::scalar(1.3)), beta("beta", Tensor::scalar(-0.4));
    const Tensor w = random_tensor({5}, rng);
    check("layer_norm", tol, {&x, &gamma, &beta}, [&](Tape& t) {
      return weighted(
          t, t.layer_norm(t.leaf(x), t.leaf(gamma), t.leaf(beta), 1e-6), w);
    });
  }
  {
    Param logits("logits", random_tensor({8}, rng, -2.0, 2.0));
    check("softmax_xent", tol, {&logits},
          [&](Tape& t) { return t.softmax_xent(t.leaf(logits), 3); });
  }
  {
    Param table("table", random_tensor({6, 4}, rng));
    const std::vector<int> ids = {2, 0, 5, 2};  // repeated row exercises scatter-add
    const Tensor w = random_tensor({4, 4}, rng);
    check("embedding_gather", tol, {&table}, [&](Tape& t) {
      return weighted(t, t.embedding_gather(t.leaf(table), ids), w);
    });
  }

  // Full model: one story step chain plus inference and cross-entropy.
  // Parameters are rescaled to O(1) values; the production init leaves
  // most gradients near the absolute-error fallback threshold, where
  // finite differences are all noise.
  {
    const ModelDims dims{8, 6, 4, 3};
    ModelParams params = init_model(dims, 5, seed + 1);
    std::uniform_real_distribution<double> d(-0.7, 0.7);
    for (Param* p : params.all()) {
      const bool is_gain = p->name.size() > 6 &&
                           p->name.compare(p->name.size() - 6, 6, ".gamma") == 0;
      for (int i = 0; i < p->value.size(); ++i) {
        p->value[i] = is_gain ? 1.0 + 0.4 * d(rng) : d(rng);
      }
    }
    const Story story = {{1, 4, 2}, {3, 5, 6, 1}, {7, 2}};
    const std::vector<int> question = {5, 1, 7};
    const int answer = 3;
    const AblationConfig ab;
    check("full_model", 1e-4, params.all(), [&](Tape& t) {
      const ModelVars mv = bind_model(t, params);
      return sample_loss_tape(t, mv, dims, story, question, answer, ab);
    });
  }

  return results;
}

}  // namespace tprnn
