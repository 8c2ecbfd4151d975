#include <benchmark/benchmark.h>

#include <random>

#include "tprnn/tensor.hpp"

namespace {

using namespace tprnn;

Tensor random_tensor(std::vector<int> dims, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Tensor t(std::move(dims));
  for (int i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

// Single-task dims: entity 15, relation 10.
void BM_Outer3(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({15}, rng);
  const Tensor b = random_tensor({10}, rng);
  const Tensor c = random_tensor({15}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(outer3(a, b, c));
  }
}
BENCHMARK(BM_Outer3);

void BM_Unbind3(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Tensor F = random_tensor({15, 10, 15}, rng);
  const Tensor e = random_tensor({15}, rng);
  const Tensor r = random_tensor({10}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(unbind3(F, e, r));
  }
}
BENCHMARK(BM_Unbind3);

void BM_TensorInnerChain(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Tensor F = random_tensor({15, 10, 15}, rng);
  const Tensor e = random_tensor({15}, rng);
  const Tensor r = random_tensor({10}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tensor_inner(tensor_inner(F, e, 1, 4), r, 1, 3));
  }
}
BENCHMARK(BM_TensorInnerChain);

}  // namespace
