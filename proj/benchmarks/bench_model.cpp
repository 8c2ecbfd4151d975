#include <benchmark/benchmark.h>

#include "tprnn/model.hpp"

namespace {

using namespace tprnn;

// Roughly a task-1 shape: vocab 22, k 8, 6-sentence story.
struct Fixture {
  ModelDims dims{22, 22, 15, 10};
  ModelParams params = init_model(dims, 8, 11);
  Story story;
  std::vector<int> question{5, 6, 7, 8};
  AblationConfig ab;

  Fixture() {
    for (int i = 0; i < 6; ++i) story.push_back({1, 2, 3, 4, 5, 6});
  }
};

void BM_StepPure(benchmark::State& state) {
  Fixture f;
  const Tensor s = encode_sentence(f.story[0], f.params.encoder);
  Tensor F({15, 10, 15});
  for (auto _ : state) {
    benchmark::DoNotOptimize(step(F, s, f.params, f.ab));
  }
}
BENCHMARK(BM_StepPure);

void BM_SampleForwardPure(benchmark::State& state) {
  Fixture f;
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_logits(f.story, f.question, f.params, f.ab));
  }
}
BENCHMARK(BM_SampleForwardPure);

void BM_SampleForwardBackward(benchmark::State& state) {
  Fixture f;
  auto ptrs = f.params.all();
  for (auto _ : state) {
    zero_grads(ptrs);
    Tape tape;
    const ModelVars mv = bind_model(tape, f.params);
    Var loss = sample_loss_tape(tape, mv, f.dims, f.story, f.question, 3, f.ab);
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.scalar(loss));
  }
}
BENCHMARK(BM_SampleForwardBackward);

}  // namespace
