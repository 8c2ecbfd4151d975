#include <random>

#include "doctest.h"
#include "tprnn/encoder.hpp"

namespace {

using namespace tprnn;

EncoderParams make_encoder(int vocab, int dim, int k, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return init_encoder(vocab, dim, k, rng);
}

}  // namespace

TEST_CASE("vocabulary reserves id 0 for PAD and is bijective") {
  Vocabulary v;
  CHECK(v.size() == 1);
  CHECK(v.token(Vocabulary::kPadId) == Vocabulary::kPadToken);
  const int a = v.add("kitchen");
  const int b = v.add("mary");
  CHECK(v.add("kitchen") == a);
  CHECK(a != b);
  CHECK(v.id("mary") == b);
  CHECK_THROWS_AS(v.id("unknown"), std::invalid_argument);
}

TEST_CASE("init_encoder: positions are ones over k, PAD row zero") {
  auto p = make_encoder(10, 6, 4, 1);
  for (int i = 0; i < p.positions.value.size(); ++i) {
    CHECK(p.positions.value[i] == 0.25);
  }
  for (int j = 0; j < 6; ++j) CHECK(p.embeddings.value.at(0, j) == 0.0);
}

TEST_CASE("init_encoder: embedding entries are uniform in [-0.01, 0.01]") {
  // 10^5 draws; bounds must hold exactly, the mean and spread statistically.
  auto p = make_encoder(12501, 8, 3, 2);  // 12500 x 8 = 1e5 random entries
  double mn = 1.0, mx = -1.0, sum = 0.0;
  long n = 0;
  for (int i = 1; i < 12501; ++i) {
    for (int j = 0; j < 8; ++j) {
      const double v = p.embeddings.value.at(i, j);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
      sum += v;
      ++n;
    }
  }
  CHECK(mn >= -0.01);
  CHECK(mx <= 0.01);
  CHECK(mn < -0.0095);  // fills the range
  CHECK(mx > 0.0095);
  CHECK(std::abs(sum / n) < 3e-4);  // ~5 sigma for U(-0.01,0.01)
}

TEST_CASE("encode_sentence equals the direct summation") {
  // k=2, d1=(1,2), d2=(3,4), positions all 0.5 -> s = (2,3).
  EncoderParams p;
  p.embeddings = Param("embeddings", Tensor({3, 2}, {0, 0, 1, 2, 3, 4}));
  p.positions = Param("positions", Tensor({2, 2}, {0.5, 0.5, 0.5, 0.5}));
  const Tensor s = encode_sentence({1, 2}, p);
  CHECK(s[0] == 2.0);
  CHECK(s[1] == 3.0);
}

TEST_CASE("all-PAD sentences encode to zero") {
  auto p = make_encoder(9, 5, 4, 3);
  const Tensor s = encode_sentence({0, 0, 0, 0}, p);
  for (int i = 0; i < s.size(); ++i) CHECK(s[i] == 0.0);
  const Tensor empty = encode_sentence({}, p);
  for (int i = 0; i < empty.size(); ++i) CHECK(empty[i] == 0.0);
}

TEST_CASE("appending PAD never changes the encoding") {
  auto p = make_encoder(9, 5, 6, 4);
  const std::vector<int> ids = {3, 1, 4};
  const Tensor a = encode_sentence(ids, p);
  const Tensor b = encode_sentence({3, 1, 4, 0, 0, 0}, p);
  for (int i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("sentences longer than k are rejected") {
  auto p = make_encoder(9, 5, 2, 5);
  CHECK_THROWS_AS(encode_sentence({1, 2, 3}, p), std::invalid_argument);
}

TEST_CASE("random sentence equals the loop oracle exactly") {
  auto p = make_encoder(20, 7, 5, 6);
  // Positions made non-uniform so the oracle is not trivial.
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int i = 0; i < p.positions.value.size(); ++i) p.positions.value[i] = d(rng);
  const std::vector<int> ids = {4, 9, 0, 17};
  Tensor want({7});
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 7; ++j) {
      want[j] += p.embeddings.value.at(ids[static_cast<size_t>(i)], j) *
                 p.positions.value.at(i, j);
    }
  }
  const Tensor got = encode_sentence(ids, p);
  for (int j = 0; j < 7; ++j) CHECK(got[j] == doctest::Approx(want[j]).epsilon(1e-15));
}

TEST_CASE("encoding is permutation-sensitive once positions differ") {
  auto p = make_encoder(9, 5, 3, 7);
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int i = 0; i < p.positions.value.size(); ++i) p.positions.value[i] = d(rng);
  const Tensor a = encode_sentence({2, 3}, p);
  const Tensor b = encode_sentence({3, 2}, p);
  bool any_diff = false;
  for (int i = 0; i < a.size(); ++i) any_diff = any_diff || a[i] != b[i];
  CHECK(any_diff);
}

TEST_CASE("tape encoding matches the pure encoder bitwise") {
  auto p = make_encoder(15, 6, 4, 8);
  const std::vector<int> ids = {2, 7, 14};
  const Tensor pure = encode_sentence(ids, p);
  Tape t;
  Var s = encode_sentence(t, t.leaf(p.embeddings), t.leaf(p.positions), ids);
  for (int i = 0; i < pure.size(); ++i) CHECK(t.value(s)[i] == pure[i]);
}

TEST_CASE("gradient of s with respect to p_i is d_i (*) upstream") {
  auto p = make_encoder(12, 4, 3, 9);
  const std::vector<int> ids = {5, 2};
  const auto rep = grad_check(
      [&](Tape& t) {
        return t.sum(
            encode_sentence(t, t.leaf(p.embeddings), t.leaf(p.positions), ids));
      },
      {&p.embeddings, &p.positions}, 1e-5);
  CHECK(rep.max_rel_err < 1e-6);

  // Direct form: with upstream all-ones, dp_i = d_i elementwise.
  zero_grads({&p.embeddings, &p.positions});
  Tape t;
  Var s = encode_sentence(t, t.leaf(p.embeddings), t.leaf(p.positions), ids);
  t.backward(t.sum(s));
  for (size_t i = 0; i < ids.size(); ++i) {
    for (int j = 0; j < 4; ++j) {
      CHECK(p.positions.grad.at(static_cast<int>(i), j) ==
            p.embeddings.value.at(ids[i], j));
    }
  }
}

TEST_CASE("mask_pad_gradient zeroes only the PAD row") {
  auto p = make_encoder(6, 3, 2, 10);
  for (int i = 0; i < p.embeddings.grad.size(); ++i) p.embeddings.grad[i] = 1.0;
  mask_pad_gradient(p);
  for (int j = 0; j < 3; ++j) CHECK(p.embeddings.grad.at(0, j) == 0.0);
  for (int j = 0; j < 3; ++j) CHECK(p.embeddings.grad.at(1, j) == 1.0);
}
