#include <cmath>
#include <random>

#include "doctest.h"
#include "tprnn/model.hpp"

namespace {

using namespace tprnn;

Tensor random_tensor(std::vector<int> dims, std::mt19937_64& rng, double lo = -1,
                     double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(dims));
  for (int i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

Tensor basis(int n, int i) {
  Tensor t({n});
  t[i] = 1.0;
  return t;
}

void check_equal(const Tensor& got, const Tensor& want) {
  REQUIRE(got.dims() == want.dims());
  for (int i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
}

void check_close(const Tensor& got, const Tensor& want, double tol) {
  REQUIRE(got.dims() == want.dims());
  for (int i = 0; i < got.size(); ++i) {
    const double scale = std::max({1.0, std::abs(got[i]), std::abs(want[i])});
    CHECK(std::abs(got[i] - want[i]) <= tol * scale);
  }
}

// Test-local expansion of one full update, straight from the definitions.
Tensor oracle_step(const Tensor& F, const Tensor& e1, const Tensor& e2,
                   const Tensor& r1, const Tensor& r2, const Tensor& r3) {
  const int ne = F.dim(0), nr = F.dim(1);
  auto retrieve = [&](const Tensor& e, const Tensor& r) {
    Tensor out({F.dim(2)});
    for (int k = 0; k < F.dim(2); ++k) {
      double acc = 0;
      for (int i = 0; i < ne; ++i)
        for (int j = 0; j < nr; ++j) acc += F.at(i, j, k) * e[i] * r[j];
      out[k] = acc;
    }
    return out;
  };
  const Tensor w_hat = retrieve(e1, r1);
  const Tensor m_hat = retrieve(e1, r2);
  const Tensor b_hat = retrieve(e2, r3);
  Tensor out = F;
  for (int i = 0; i < ne; ++i) {
    for (int j = 0; j < nr; ++j) {
      for (int k = 0; k < F.dim(2); ++k) {
        out.at(i, j, k) += e1[i] * r1[j] * (e2[k] - w_hat[k]) +
                           e1[i] * r2[j] * (w_hat[k] - m_hat[k]) +
                           e2[i] * r3[j] * (e1[k] - b_hat[k]);
      }
    }
  }
  return out;
}

ModelParams tiny_model(uint64_t seed) {
  return init_model(ModelDims{8, 6, 4, 3}, 5, seed);
}

}  // namespace

TEST_CASE("mlp_forward: zero parameters give zero output, range is (-1,1)") {
  MlpParams zero;
  zero.W1 = Param("W1", Tensor({4, 3}));
  zero.b1 = Param("b1", Tensor({4}));
  zero.W2 = Param("W2", Tensor({2, 4}));
  zero.b2 = Param("b2", Tensor({2}));
  const Tensor out = mlp_forward(Tensor::vec({1, -2, 3}), zero);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);

  std::mt19937_64 rng(1);
  MlpParams m;
  m.W1 = Param("W1", random_tensor({6, 3}, rng, -5, 5));
  m.b1 = Param("b1", random_tensor({6}, rng, -5, 5));
  m.W2 = Param("W2", random_tensor({2, 6}, rng, -5, 5));
  m.b2 = Param("b2", random_tensor({2}, rng, -5, 5));
  const Tensor y = mlp_forward(Tensor::vec({9, -9, 4}), m);
  for (int i = 0; i < y.size(); ++i) {
    CHECK(y[i] > -1.0);
    CHECK(y[i] < 1.0);
  }
}

TEST_CASE("mlp_forward matches the two-stage loop oracle") {
  std::mt19937_64 rng(2);
  MlpParams m;
  m.W1 = Param("W1", random_tensor({5, 4}, rng));
  m.b1 = Param("b1", random_tensor({5}, rng));
  m.W2 = Param("W2", random_tensor({3, 5}, rng));
  m.b2 = Param("b2", random_tensor({3}, rng));
  const Tensor x = random_tensor({4}, rng);

  Tensor h({5});
  for (int i = 0; i < 5; ++i) {
    double acc = m.b1.value[i];
    for (int j = 0; j < 4; ++j) acc += m.W1.value.at(i, j) * x[j];
    h[i] = std::tanh(acc);
  }
  Tensor want({3});
  for (int i = 0; i < 3; ++i) {
    double acc = m.b2.value[i];
    for (int j = 0; j < 5; ++j) acc += m.W2.value.at(i, j) * h[j];
    want[i] = std::tanh(acc);
  }
  check_close(mlp_forward(x, m), want, 1e-15);
}

TEST_CASE("update_reps: five distinct networks with the configured dims") {
  ModelParams p = init_model(ModelDims{22, 22, 15, 10}, 8, 3);
  std::mt19937_64 rng(4);
  const Tensor s = random_tensor({22}, rng);
  const UpdateReps u = update_reps(s, p);
  CHECK(u.e1.size() == 15);
  CHECK(u.e2.size() == 15);
  CHECK(u.r1.size() == 10);
  CHECK(u.r2.size() == 10);
  CHECK(u.r3.size() == 10);
  bool differ = false;
  for (int i = 0; i < 15; ++i) differ = differ || u.e1[i] != u.e2[i];
  CHECK(differ);
  const UpdateReps again = update_reps(s, p);
  check_equal(u.e1, again.e1);
  check_equal(u.r3, again.r3);
}

TEST_CASE("write_delta on the empty state stores the new association") {
  const Tensor F({4, 3, 4});
  const Tensor e1 = basis(4, 0), e2 = basis(4, 1), r1 = basis(3, 0);
  const WriteDelta wd = write_delta(F, e1, r1, e2);
  for (int i = 0; i < wd.w_hat.size(); ++i) CHECK(wd.w_hat[i] == 0.0);
  check_equal(wd.W, outer3(e1, r1, e2));
}

TEST_CASE("write_delta cancels the previously stored target") {
  std::mt19937_64 rng(5);
  const Tensor e1 = basis(4, 2), r1 = basis(3, 1);
  const Tensor x = random_tensor({4}, rng);
  const Tensor y = random_tensor({4}, rng);
  const Tensor F = outer3(e1, r1, x);
  const WriteDelta wd = write_delta(F, e1, r1, y);
  check_equal(wd.w_hat, x);
  const Tensor F2 = add(F, wd.W);
  check_close(unbind3(F2, e1, r1), y, 1e-12);
  // No residue of x anywhere: F2 equals the clean store of y.
  check_close(F2, outer3(e1, r1, y), 1e-12);
}

TEST_CASE("move_delta on the empty state is zero") {
  const Tensor F({4, 3, 4});
  const Tensor e1 = basis(4, 0), r2 = basis(3, 1);
  const WriteDelta wd = write_delta(F, e1, basis(3, 0), basis(4, 1));
  const Tensor M = move_delta(F, e1, r2, wd.w_hat);
  for (int i = 0; i < M.size(); ++i) CHECK(M[i] == 0.0);
}

TEST_CASE("move_delta re-files the displaced target under the new relation") {
  std::mt19937_64 rng(6);
  const Tensor e1 = basis(4, 0), e2 = basis(4, 1);
  const Tensor r1 = basis(3, 0), r2 = basis(3, 1), r3 = basis(3, 2);
  const Tensor x = random_tensor({4}, rng);
  const Tensor F = outer3(e1, r1, x);
  const Tensor F1 = step_from_reps(F, e1, e2, r1, r2, r3);
  check_close(unbind3(F1, e1, r2), x, 1e-12);
}

TEST_CASE("backlink_delta stores the reversed edge") {
  const Tensor F({4, 3, 4});
  const Tensor e1 = basis(4, 0), e2 = basis(4, 1), r3 = basis(3, 2);
  check_equal(backlink_delta(F, e1, e2, r3), outer3(e2, r3, e1));

  std::mt19937_64 rng(7);
  const Tensor e1b = basis(4, 2), e2b = basis(4, 3);
  const Tensor F2 = add(outer3(e1b, basis(3, 0), random_tensor({4}, rng)),
                        backlink_delta(Tensor({4, 3, 4}), e1b, e2b, r3));
  check_close(unbind3(F2, e2b, r3), e1b, 1e-12);
}

TEST_CASE("deltas match the brute-force expansion on random state") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor F = random_tensor({4, 3, 4}, rng);
    const Tensor e1 = random_tensor({4}, rng), e2 = random_tensor({4}, rng);
    const Tensor r1 = random_tensor({3}, rng), r2 = random_tensor({3}, rng),
                 r3 = random_tensor({3}, rng);
    const Tensor got = step_from_reps(F, e1, e2, r1, r2, r3);
    check_close(got, oracle_step(F, e1, e2, r1, r2, r3), 1e-12);
  }
}

TEST_CASE("retrieval ordering: all retrievals read the pre-update state") {
  // Orthonormal disjoint vectors, F = 0.
  const Tensor F({4, 3, 4});
  const Tensor e1 = basis(4, 0), e2 = basis(4, 1);
  const Tensor r1 = basis(3, 0), r2 = basis(3, 1), r3 = basis(3, 2);
  const Tensor F1 = step_from_reps(F, e1, e2, r1, r2, r3);
  check_equal(unbind3(F1, e1, r1), e2);
  check_equal(unbind3(F1, e1, r2), Tensor({4}));  // move slot stays empty
  check_equal(unbind3(F1, e2, r3), e1);
}

TEST_CASE("overwrite idempotence leaves no residue") {
  std::mt19937_64 rng(9);
  const Tensor e1 = basis(4, 1), r1 = basis(3, 2);
  const Tensor x = random_tensor({4}, rng), y = random_tensor({4}, rng);
  Tensor F = add(Tensor({4, 3, 4}), write_delta(Tensor({4, 3, 4}), e1, r1, x).W);
  F = add(F, write_delta(F, e1, r1, y).W);
  check_close(unbind3(F, e1, r1), y, 1e-12);
  check_close(F, outer3(e1, r1, y), 1e-12);
}

TEST_CASE("step with an all-PAD sentence and fresh init changes nothing") {
  ModelParams p = tiny_model(10);
  std::mt19937_64 rng(11);
  const Tensor F = random_tensor({4, 3, 4}, rng);
  const Tensor s = encode_sentence({0, 0, 0}, p.encoder);  // zero vector
  // Fresh init has zero biases, so every representation is exactly zero.
  const Tensor F1 = step(F, s, p, AblationConfig{});
  check_equal(F1, F);
}

TEST_CASE("ablation composition is exact") {
  ModelParams p = tiny_model(12);
  std::mt19937_64 rng(13);
  const Tensor F = random_tensor({4, 3, 4}, rng, -0.5, 0.5);
  const Tensor s = random_tensor({8}, rng);

  const UpdateReps u = update_reps(s, p);
  const WriteDelta wd = write_delta(F, u.e1, u.r1, u.e2);
  const Tensor M = move_delta(F, u.e1, u.r2, wd.w_hat);
  const Tensor B = backlink_delta(F, u.e1, u.e2, u.r3);

  check_equal(step(F, s, p, {true, false, false}), add(F, wd.W));
  check_equal(step(F, s, p, {true, true, false}), add(F, add(wd.W, M)));
  check_equal(step(F, s, p, {true, false, true}), add(F, add(wd.W, B)));
  check_equal(step(F, s, p, {true, true, true}), add(F, add(add(wd.W, M), B)));
  CHECK_THROWS_AS(step(F, s, p, {false, false, false}), std::invalid_argument);
}

TEST_CASE("layer_norm basics") {
  LayerNormParams ln;
  ln.gamma = Param("g", Tensor::scalar(1.0));
  ln.beta = Param("b", Tensor::scalar(0.0));

  // Mean 0, variance 1 input passes through up to the epsilon effect.
  const Tensor x = Tensor::vec({1, -1, 1, -1});
  check_close(layer_norm(x, ln), x, 1e-6);

  // Constant vectors collapse to beta.
  ln.beta.value.at(0) = 0.75;
  const Tensor c = layer_norm(Tensor::vec({3, 3, 3, 3, 3}), ln);
  for (int i = 0; i < c.size(); ++i) CHECK(c[i] == 0.75);

  CHECK_THROWS_AS(layer_norm(Tensor::vec({1}), ln), std::invalid_argument);
}

TEST_CASE("layer_norm output statistics") {
  std::mt19937_64 rng(14);
  LayerNormParams ln;
  ln.gamma = Param("g", Tensor::scalar(1.0));
  ln.beta = Param("b", Tensor::scalar(0.0));
  const Tensor x = random_tensor({10}, rng, -3.0, 3.0);
  const Tensor y = layer_norm(x, ln);
  double mean = 0;
  for (int i = 0; i < y.size(); ++i) mean += y[i];
  mean /= y.size();
  CHECK(std::abs(mean) <= 1e-12);
  double var = 0;
  for (int i = 0; i < y.size(); ++i) var += (y[i] - mean) * (y[i] - mean);
  var /= y.size();
  CHECK(var <= 1.0);
  CHECK(var >= 1.0 - 1e-6);
}

TEST_CASE("infer on the zero state stays finite and equals the beta fiber") {
  ModelParams p = tiny_model(15);
  p.ln1.beta.value.at(0) = 0.5;
  p.ln2.beta.value.at(0) = 0.5;
  p.ln3.beta.value.at(0) = 0.5;
  const Tensor F({4, 3, 4});
  std::mt19937_64 rng(16);
  const Tensor s_q = random_tensor({8}, rng);
  const Tensor logits = infer(F, s_q, p);
  CHECK(logits.all_finite());
  // Every inference step is LN(0) = beta * ones; logits = Z * (3*beta*ones).
  Tensor ones({4});
  for (int i = 0; i < 4; ++i) ones[i] = 1.5;
  check_close(logits, unbind2(p.proj.value, ones), 1e-12);
}

TEST_CASE("single stored triple: first inference step is the normalized target") {
  ModelParams p = tiny_model(17);
  const Tensor n = basis(4, 0), l1 = basis(3, 0), target = basis(4, 2);
  const Tensor F = outer3(n, l1, target);
  const Tensor i1 = layer_norm(unbind3(F, n, l1), p.ln1);
  // Hand layer norm of the basis target: mean 1/4, var 3/16.
  const double inv = 1.0 / std::sqrt(3.0 / 16.0 + 1e-6);
  for (int i = 0; i < 4; ++i) {
    const double want = ((i == 2 ? 1.0 : 0.0) - 0.25) * inv;
    CHECK(i1[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("three-hop chain retrieval lands on the final entity") {
  // Entities A..D and a fifth unused direction; store A-l1->B, B-l2->C,
  // C-l3->D, then follow the chain from A.
  const int ne = 5;
  const Tensor A = basis(ne, 0), B = basis(ne, 1), C = basis(ne, 2),
               D = basis(ne, 3);
  const Tensor l1 = basis(3, 0), l2 = basis(3, 1), l3 = basis(3, 2);
  Tensor F = add(add(outer3(A, l1, B), outer3(B, l2, C)), outer3(C, l3, D));

  LayerNormParams ln;
  ln.gamma = Param("g", Tensor::scalar(1.0));
  ln.beta = Param("b", Tensor::scalar(0.0));
  const Tensor i1 = layer_norm(unbind3(F, A, l1), ln);
  const Tensor i2 = layer_norm(unbind3(F, i1, l2), ln);
  const Tensor i3 = layer_norm(unbind3(F, i2, l3), ln);

  // Each hop recovers the layer-normed basis vector of the next entity.
  const Tensor ln_b = layer_norm(B, ln);
  const Tensor ln_c = layer_norm(C, ln);
  const Tensor ln_d = layer_norm(D, ln);
  check_close(i1, ln_b, 1e-9);
  check_close(i2, ln_c, 1e-5);  // epsilon-scale effects accumulate per hop
  check_close(i3, ln_d, 1e-5);

  // Project onto a vocabulary whose answer row aligns with D; distractor
  // rows point at A and the unused direction.
  Tensor Z({3, ne});
  Z.at(0, 0) = 1.0;   // distractor: A
  Z.at(1, 3) = 1.0;   // answer: D
  Z.at(2, 4) = 1.0;   // distractor: unused direction
  const Tensor logits = unbind2(Z, add(add(i1, i2), i3));
  CHECK(argmax(logits) == 1);
}

TEST_CASE("loss: uniform, dominant, and oracle cases") {
  const Tensor uniform = Tensor::vec({0.3, 0.3, 0.3, 0.3});
  CHECK(loss(uniform, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-15));

  Tensor dominant({4});
  dominant[1] = 60.0;
  CHECK(loss(dominant, 1) < 1e-20);

  std::mt19937_64 rng(18);
  const Tensor logits = random_tensor({9}, rng, -4, 4);
  long double z = 0.0L;
  for (int i = 0; i < 9; ++i) z += expl(static_cast<long double>(logits[i]));
  const double want = static_cast<double>(logl(z) - static_cast<long double>(logits[4]));
  CHECK(loss(logits, 4) == doctest::Approx(want).epsilon(1e-12));

  CHECK_THROWS_AS(loss(uniform, 0), std::invalid_argument);  // PAD excluded
}

TEST_CASE("softmax sums to one") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor p = softmax(random_tensor({11}, rng, -30, 30));
    double sum = 0;
    for (int i = 0; i < p.size(); ++i) sum += p[i];
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("masked story state equals the unpadded story state") {
  ModelParams p = tiny_model(20);
  std::mt19937_64 rng(21);
  for (Param* q : p.all()) {
    for (int i = 0; i < q->value.size(); ++i) {
      q->value[i] += 0.3 * std::uniform_real_distribution<double>(-1, 1)(rng);
    }
  }
  const Story story = {{1, 2, 3}, {4, 5}, {6, 7, 1}};
  const Story padded = {{1, 2, 3}, {4, 5}, {6, 7, 1}, {}, {}};
  const std::vector<double> mask = {1, 1, 1, 0, 0};
  const Tensor a = story_state(story, p, AblationConfig{});
  const Tensor b = story_state_masked(padded, mask, p, AblationConfig{});
  check_equal(b, a);
}

TEST_CASE("tape forward equals the pure forward bitwise") {
  ModelParams p = tiny_model(22);
  std::mt19937_64 rng(23);
  for (Param* q : p.all()) {
    for (int i = 0; i < q->value.size(); ++i) {
      q->value[i] += 0.3 * std::uniform_real_distribution<double>(-1, 1)(rng);
    }
  }
  const Story story = {{1, 4, 2}, {3, 5, 6, 1}, {7, 2}};
  const std::vector<int> question = {5, 1, 7};
  const int answer = 3;
  const AblationConfig ab;

  const double pure = loss(forward_logits(story, question, p, ab), answer);
  Tape t;
  const ModelVars mv = bind_model(t, p);
  const Var tl = sample_loss_tape(t, mv, p.dims, story, question, answer, ab);
  CHECK(t.scalar(tl) == pure);
}
