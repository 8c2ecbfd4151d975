#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tprnn/data_babi.hpp"

namespace {

using namespace tprnn;

std::vector<TextSample> parse_text(const std::string& text, int task_id = 1) {
  std::istringstream in(text);
  return parse_task_stream(in, task_id);
}

// A tiny deterministic movement-story pool for augmentation tests: every
// story mentions two distinct entities, questions name one of them.
std::vector<TextSample> toy_pool(int task_id, int n, uint64_t seed) {
  static const std::vector<std::string> entities = {"mary", "john", "daniel",
                                                    "sandra"};
  static const std::vector<std::string> places = {"kitchen", "garden", "office"};
  std::mt19937_64 rng(seed);
  std::vector<TextSample> out;
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<size_t> e(0, entities.size() - 1);
    std::uniform_int_distribution<size_t> p(0, places.size() - 1);
    const std::string a = entities[e(rng)];
    std::string b = entities[e(rng)];
    while (b == a) b = entities[e(rng)];
    const std::string pa = places[p(rng)];
    const std::string pb = places[p(rng)];
    TextSample s;
    s.story = {tokenize(a + " went to the " + pa + "."),
               tokenize(b + " went to the " + pb + ".")};
    s.question = tokenize("Where is " + a + "?");
    s.answer = pa;
    s.task_id = task_id;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits punctuation") {
  const auto t = tokenize("Mary went to the kitchen.");
  REQUIRE(t.size() == 6);
  CHECK(t[0] == "mary");
  CHECK(t[4] == "kitchen");
  CHECK(t[5] == ".");
  const auto q = tokenize("Where is Mary?");
  CHECK(q.back() == "?");
  CHECK(detokenize(q) == "where is mary ?");
}

TEST_CASE("parse: one story, one question") {
  const auto samples = parse_text(
      "1 mary went to the kitchen.\n"
      "2 where is mary?\tkitchen\t1\n");
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].story.size() == 1);
  CHECK(samples[0].story[0][0] == "mary");
  CHECK(samples[0].question[0] == "where");
  CHECK(samples[0].answer == "kitchen");
  CHECK(samples[0].task_id == 1);
}

TEST_CASE("parse: id reset starts a new story") {
  const auto samples = parse_text(
      "1 john moved to the office.\n"
      "2 mary went to the kitchen.\n"
      "3 where is mary?\tkitchen\t2\n"
      "4 mary went to the garden.\n"
      "5 where is mary?\tgarden\t4\n"
      "1 sandra took the apple.\n"
      "2 where is the apple?\tsandra\t1\n");
  REQUIRE(samples.size() == 3);
  CHECK(samples[0].story.size() == 2);
  CHECK(samples[1].story.size() == 3);  // questions are excluded from stories
  // After the reset, earlier sentences are gone.
  CHECK(samples[2].story.size() == 1);
  CHECK(samples[2].story[0][0] == "sandra");
}

TEST_CASE("parse: question lines without support ids round-trip") {
  const auto samples = parse_text("1 mary is here.\n2 where is mary?\there\n");
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].answer == "here");
}

TEST_CASE("parse: empty file and malformed lines") {
  CHECK(parse_text("").empty());
  CHECK_THROWS_AS(parse_text("mary went home\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_text("x1 mary went home\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_text("1 where is mary?\t\t1\n"), std::runtime_error);
}

TEST_CASE("comma-joined answers stay atomic") {
  const auto samples = parse_text(
      "1 the office is north of the kitchen.\n"
      "2 how do you go from the kitchen to the office?\tn,w\t1\n",
      19);
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].answer == "n,w");
  const VocabInfo vi = build_vocab(samples);
  CHECK(vi.vocab.contains("n,w"));
  const Sample s = encode_sample(samples[0], vi.vocab, vi.max_words);
  CHECK(s.answer == vi.vocab.id("n,w"));
}

TEST_CASE("build_vocab: PAD at zero, lowercase tokens, k is the longest sentence") {
  const auto samples = parse_text(
      "1 mary went to the kitchen.\n"
      "2 john grabbed the red apple there.\n"
      "3 where is mary?\tkitchen\t1\n");
  const VocabInfo vi = build_vocab(samples);
  CHECK(vi.vocab.id(Vocabulary::kPadToken) == 0);
  CHECK(vi.max_words == 7);  // "john grabbed the red apple there ."
  for (const auto& tok : vi.vocab.tokens()) {
    for (char c : tok) CHECK(!(c >= 'A' && c <= 'Z'));
  }
  CHECK(vi.vocab.contains("kitchen"));
  CHECK(vi.vocab.contains("?"));
}

TEST_CASE("round-trip: write_babi_file output reparses to the same tokens") {
  auto pool = toy_pool(3, 25, 9);
  const std::string path = "roundtrip_test.txt";
  write_babi_file(path, pool);
  const auto back = parse_task_file(path, 3);
  REQUIRE(back.size() == pool.size());
  for (size_t i = 0; i < pool.size(); ++i) {
    CHECK(back[i].story == pool[i].story);
    CHECK(back[i].question == pool[i].question);
    CHECK(back[i].answer == pool[i].answer);
  }
  std::remove(path.c_str());
}

TEST_CASE("batching pads stories to the batch max and masks padded steps") {
  Vocabulary v;
  const int w = v.add("w");
  Sample a;
  a.story = {{w}, {w}, {w}};
  a.question = {w};
  a.answer = w;
  Sample b = a;
  b.story = {{w}, {w}, {w}, {w}, {w}};
  const Batch batch = make_batch({&a, &b});
  CHECK(batch.story_len == 5);
  CHECK(batch.samples[0].story.size() == 5);
  CHECK(batch.samples[0].story[3].empty());  // all-PAD sentence
  CHECK(batch.mask[0] == std::vector<double>{1, 1, 1, 0, 0});
  CHECK(batch.mask[1] == std::vector<double>{1, 1, 1, 1, 1});
}

TEST_CASE("batch stream is seed-deterministic and epoch-exhaustive") {
  Vocabulary v;
  const int w = v.add("w");
  std::vector<Sample> samples;
  for (int i = 0; i < 10; ++i) {
    Sample s;
    s.story = {{w}};
    s.question = {w};
    s.answer = w;
    s.task_id = i;  // marker to track order
    samples.push_back(std::move(s));
  }
  auto order_of = [&](uint64_t seed) {
    BatchStream stream(samples, 4, seed);
    std::vector<int> order;
    for (int b = 0; b < 3; ++b) {
      for (const Sample& s : stream.next().samples) order.push_back(s.task_id);
    }
    return order;
  };
  const auto o1 = order_of(77);
  const auto o2 = order_of(77);
  CHECK(o1 == o2);
  // One epoch covers every sample exactly once (batches 4+4+2).
  std::set<int> seen(o1.begin(), o1.end());
  CHECK(seen.size() == 10);
  CHECK(o1.size() == 10);
  const auto o3 = order_of(78);
  CHECK(o1 != o3);
}

TEST_CASE("augment: counts, question fraction, and train subsets") {
  AugmentSpec spec;
  spec.pairs_per_cell = 50;  // scaled-down cells, same bookkeeping
  spec.seed = 5;
  std::map<int, TaskSplits> base;
  for (int task : spec.task_pool) {
    base[task].train = toy_pool(task, 120, 100 + static_cast<uint64_t>(task));
    base[task].test = toy_pool(task, 120, 200 + static_cast<uint64_t>(task));
  }
  const AugmentResult res = augment_systematic(base, spec);

  // 5 entities x 8 tasks x 50 pairs on the test side.
  CHECK(res.extra_test.size() == 5u * 8u * 50u);
  // Train side: (8+6+4+2+1) cells.
  CHECK(res.extra_train.size() == 21u * 50u);

  // Per-entity train task counts follow the 8/6/4/2/1 ladder.
  REQUIRE(res.train_tasks.size() == 5);
  for (size_t e = 0; e < spec.entities.size(); ++e) {
    const auto& tasks = res.train_tasks.at(spec.entities[e]);
    CHECK(static_cast<int>(tasks.size()) == spec.train_task_counts[e]);
    for (int t : tasks) {
      CHECK(std::count(spec.task_pool.begin(), spec.task_pool.end(), t) == 1);
    }
    CHECK(std::set<int>(tasks.begin(), tasks.end()).size() == tasks.size());
  }

  // Exact question-containment fraction per test cell.
  std::map<std::pair<std::string, int>, std::pair<int, int>> cells;
  for (const TextSample& s : res.extra_test) {
    auto& c = cells[{s.entity, s.task_id}];
    c.second += 1;
    if (std::find(s.question.begin(), s.question.end(), s.entity) !=
        s.question.end()) {
      c.first += 1;
    }
    // The new entity must actually appear in the story.
    bool in_story = false;
    for (const auto& sentence : s.story) {
      in_story = in_story || std::find(sentence.begin(), sentence.end(),
                                       s.entity) != sentence.end();
    }
    CHECK(in_story);
  }
  CHECK(cells.size() == 40);
  for (const auto& [cell, counts] : cells) {
    CHECK(counts.second == 50);
    CHECK(counts.first == 10);  // exactly 20%
  }

  // Held-out cells contribute nothing to the train side.
  std::set<std::pair<std::string, int>> train_cells;
  for (const TextSample& s : res.extra_train) {
    train_cells.insert({s.entity, s.task_id});
  }
  for (const auto& [entity, tasks] : res.train_tasks) {
    for (int task : spec.task_pool) {
      const bool chosen =
          std::find(tasks.begin(), tasks.end(), task) != tasks.end();
      CHECK(train_cells.count({entity, task}) == (chosen ? 1u : 0u));
    }
  }
}

TEST_CASE("augment: colliding entity names are rejected") {
  AugmentSpec spec;
  spec.pairs_per_cell = 5;
  spec.entities = {"mary", "alex", "glenn", "jordan", "mike"};  // mary collides
  std::map<int, TaskSplits> base;
  for (int task : spec.task_pool) {
    base[task].train = toy_pool(task, 30, 1);
    base[task].test = toy_pool(task, 30, 2);
  }
  CHECK_THROWS_AS(augment_systematic(base, spec), std::invalid_argument);
}

TEST_CASE("augment: pool exhaustion is reported") {
  AugmentSpec spec;
  spec.pairs_per_cell = 50;
  std::map<int, TaskSplits> base;
  for (int task : spec.task_pool) {
    base[task].train = toy_pool(task, 10, 1);  // far too small
    base[task].test = toy_pool(task, 10, 2);
  }
  CHECK_THROWS_AS(augment_systematic(base, spec), std::runtime_error);
}

TEST_CASE("question sentences always follow their story sentences") {
  auto pool = toy_pool(1, 10, 3);
  const VocabInfo vi = build_vocab(pool);
  for (const auto& ts : pool) {
    const Sample s = encode_sample(ts, vi.vocab, vi.max_words);
    CHECK(s.story.size() == ts.story.size());
    CHECK(!s.question.empty());
    CHECK(s.answer > 0);
  }
}
