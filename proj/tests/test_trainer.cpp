#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tprnn/checkpoint.hpp"
#include "tprnn/trainer.hpp"

namespace {

using namespace tprnn;

// Minimal in-memory where-is corpus: two-sentence stories over a fixed
// lexicon, answer is the asked entity's location.
Datasets mini_datasets(int n_train, int n_valid, int n_test, uint64_t seed) {
  static const std::vector<std::string> entities = {"mary", "john"};
  static const std::vector<std::string> places = {"kitchen", "garden", "office"};
  std::mt19937_64 rng(seed);
  auto make = [&](int n, int task) {
    std::vector<TextSample> out;
    std::uniform_int_distribution<size_t> e(0, entities.size() - 1);
    std::uniform_int_distribution<size_t> p(0, places.size() - 1);
    for (int i = 0; i < n; ++i) {
      const std::string a = entities[e(rng)];
      const std::string b = a == "mary" ? "john" : "mary";
      const std::string pa = places[p(rng)];
      std::string pb = places[p(rng)];
      TextSample s;
      s.story = {tokenize(a + " went to the " + pa + "."),
                 tokenize(b + " went to the " + pb + ".")};
      const bool ask_a = e(rng) == 0;
      s.question = tokenize("where is " + (ask_a ? a : b) + "?");
      s.answer = ask_a ? pa : pb;
      s.task_id = task;
      out.push_back(std::move(s));
    }
    return out;
  };
  const auto train = make(n_train, 1);
  const auto valid = make(n_valid, 1);
  const auto test = make(n_test, 1);
  const VocabInfo vi = build_vocab({&train, &valid, &test});
  Datasets ds;
  ds.vocab = vi.vocab;
  ds.max_words = vi.max_words;
  ds.train = encode_samples(train, ds.vocab, ds.max_words);
  ds.valid = encode_samples(valid, ds.vocab, ds.max_words);
  ds.test = encode_samples(test, ds.vocab, ds.max_words);
  return ds;
}

TrainConfig mini_config(uint64_t seed) {
  TrainConfig cfg;
  cfg.mode = RunMode::SingleTask;
  cfg.task_id = 1;
  cfg.batch_size = 8;
  cfg.dim_hidden = 12;
  cfg.dim_entity = 6;
  cfg.dim_relation = 4;
  cfg.opt = single_task_preset();
  cfg.max_steps = 30;
  cfg.eval_every = 10;
  cfg.patience = 20;
  cfg.seed = seed;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("error_percent: perfect and random predictors") {
  CHECK(error_percent({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(error_percent({1, 2, 3, 4}, {1, 2, 0, 0}) == 50.0);
  CHECK_THROWS_AS(error_percent({1}, {1, 2}), std::invalid_argument);

  // A uniform random predictor over V classes has ~100*(1-1/V)% error.
  const int V = 8;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(1, V);
  std::vector<int> preds, golds;
  for (int i = 0; i < 20000; ++i) {
    preds.push_back(pick(rng));
    golds.push_back(pick(rng));
  }
  const double expected = 100.0 * (1.0 - 1.0 / V);
  CHECK(error_percent(preds, golds) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("count_failed_tasks applies the 5% threshold") {
  CHECK(count_failed_tasks({{1, 0.0}, {2, 5.0}, {3, 5.1}, {4, 80.0}}) == 2);
  CHECK(count_failed_tasks({}) == 0);
}

TEST_CASE("mode presets resolve the published dimensions") {
  TrainConfig single;
  single.mode = RunMode::SingleTask;
  apply_mode_preset(single);
  CHECK(single.batch_size == 128);
  const ModelDims sd = resolve_dims(single, 23);
  CHECK(sd.vocab == 23);
  CHECK(sd.hidden == 23);  // hidden follows the vocabulary for single-task
  CHECK(sd.entity == 15);
  CHECK(sd.relation == 10);

  TrainConfig all;
  all.mode = RunMode::AllTasks;
  apply_mode_preset(all);
  CHECK(all.batch_size == 32);
  const ModelDims ad = resolve_dims(all, 170);
  CHECK(ad.hidden == 90);
  CHECK(ad.entity == 40);
  CHECK(ad.relation == 20);
}

TEST_CASE("fixed seed gives a bitwise-identical loss trace") {
  const Datasets ds = mini_datasets(64, 16, 16, 5);
  TrainConfig cfg = mini_config(11);
  cfg.max_steps = 10;
  const TrainResult a = train(cfg, ds);
  const TrainResult b = train(cfg, ds);
  REQUIRE(a.metrics.step_losses.size() == 10);
  REQUIRE(b.metrics.step_losses.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(a.metrics.step_losses[i] == b.metrics.step_losses[i]);
  }
  TrainConfig other = cfg;
  other.seed = 12;
  const TrainResult c = train(other, ds);
  bool any_diff = false;
  for (int i = 0; i < 10; ++i) {
    any_diff = any_diff || a.metrics.step_losses[i] != c.metrics.step_losses[i];
  }
  CHECK(any_diff);
}

TEST_CASE("early stopping returns the best-validation parameters") {
  const Datasets ds = mini_datasets(64, 24, 24, 6);
  const TrainConfig cfg = mini_config(13);
  const TrainResult res = train(cfg, ds);
  REQUIRE(!res.metrics.evals.empty());
  double best_seen = std::numeric_limits<double>::infinity();
  for (const auto& rec : res.metrics.evals) {
    best_seen = std::min(best_seen, rec.val_error_pct);
  }
  CHECK(res.metrics.best_val_error_pct == best_seen);
  const EvalResult check = evaluate(res.params, ds.valid, cfg.ablation);
  CHECK(check.error_pct == res.metrics.best_val_error_pct);
}

TEST_CASE("checkpoint save/load/save is byte-identical and value-exact") {
  const Datasets ds = mini_datasets(32, 8, 8, 7);
  TrainConfig cfg = mini_config(17);
  cfg.max_steps = 5;
  cfg.eval_every = 5;
  TrainResult res = train(cfg, ds);

  const ModelDims dims = resolve_dims(cfg, ds.vocab.size());
  const std::string config = config_to_json(cfg, dims, ds.max_words);
  const std::string p1 = "ckpt_a.bin", p2 = "ckpt_b.bin";
  checkpoint_save(p1, res.params, ds.vocab, config);

  Checkpoint ck = checkpoint_load(p1);
  CHECK(ck.vocab.size() == ds.vocab.size());
  CHECK(ck.max_words == ds.max_words);
  CHECK(ck.config_json == config);
  checkpoint_save(p2, ck.params, ck.vocab, ck.config_json);
  CHECK(slurp(p1) == slurp(p2));

  // The reloaded model reproduces the saved model's validation loss exactly.
  const EvalResult before = evaluate(res.params, ds.valid, cfg.ablation);
  const EvalResult after = evaluate(ck.params, ds.valid, cfg.ablation);
  CHECK(before.mean_loss == after.mean_loss);
  CHECK(before.error_pct == after.error_pct);

  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("checkpoint rejects bad magic and truncation") {
  const std::string path = "ckpt_bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTTHIS!rest of the file";
  }
  CHECK_THROWS_AS(checkpoint_load(path), CheckpointError);
  {
    std::ofstream out(path, std::ios::binary);
    out.write("TPRRNN1\0", 8);
    const char partial[4] = {9, 0, 0, 0};  // claims 9 tensors, provides none
    out.write(partial, 4);
  }
  CHECK_THROWS_AS(checkpoint_load(path), CheckpointError);
  CHECK_THROWS_AS(checkpoint_load("does_not_exist.bin"), CheckpointError);
  std::remove(path.c_str());
}

TEST_CASE("training reduces loss and evaluate scores the test split") {
  const Datasets ds = mini_datasets(128, 32, 32, 8);
  TrainConfig cfg = mini_config(19);
  cfg.max_steps = 120;
  cfg.eval_every = 40;
  const TrainResult res = train(cfg, ds);
  REQUIRE(res.metrics.step_losses.size() >= 100);
  const double early = res.metrics.step_losses[2];
  const double late = res.metrics.step_losses.back();
  CHECK(late < early);
  CHECK(res.metrics.test_error_pct >= 0.0);
  CHECK(res.metrics.test_error_pct <= 100.0);
  CHECK(res.metrics.reinit_count == 0);

  // The PAD embedding row never moves.
  for (int j = 0; j < res.params.encoder.dim_symbol(); ++j) {
    CHECK(res.params.encoder.embeddings.value.at(Vocabulary::kPadId, j) == 0.0);
  }
}

TEST_CASE("metrics csv has one row per eval plus a summary") {
  const Datasets ds = mini_datasets(32, 8, 8, 9);
  TrainConfig cfg = mini_config(23);
  cfg.max_steps = 20;
  cfg.eval_every = 10;
  const TrainResult res = train(cfg, ds);
  const std::string path = "metrics_test.csv";
  write_metrics_csv(path, res.metrics);
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  bool summary = false;
  while (std::getline(in, line)) {
    if (line.rfind("step,", 0) == 0) continue;
    if (line.rfind("#", 0) == 0) {
      summary = true;
      continue;
    }
    ++rows;
  }
  CHECK(rows == static_cast<int>(res.metrics.evals.size()));
  CHECK(summary);
  std::remove(path.c_str());
}
