#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tprnn/encoder.hpp"

namespace tprnn {

/// One question with every statement sentence that precedes it in its
/// story, still in token-string form. The answer is a single atomic token
/// (comma-joined answers such as "n,w" stay one token).
struct TextSample {
  std::vector<std::vector<std::string>> story;
  std::vector<std::string> question;
  std::string answer;
  int task_id = 0;
  std::string entity;  // augmentation entity, empty for base data
};

/// Lowercases and splits off punctuation as separate tokens.
std::vector<std::string> tokenize(const std::string& text);
std::string detokenize(const std::vector<std::string>& tokens);

/// bAbI v1.2 line format: "ID text" for statements, "ID text\tanswer[\tsupport]"
/// for questions; an ID of 1 starts a new story. Supporting-fact ids are
/// parsed and discarded.
std::vector<TextSample> parse_task_stream(std::istream& in, int task_id);
std::vector<TextSample> parse_task_file(const std::string& path, int task_id);

struct VocabInfo {
  Vocabulary vocab;
  int max_words = 0;  // longest sentence (statement or question) seen
};

/// Vocabulary over all story, question, and answer tokens of the given
/// sample sets, in sorted order after PAD.
VocabInfo build_vocab(const std::vector<const std::vector<TextSample>*>& sets);
VocabInfo build_vocab(const std::vector<TextSample>& samples);

/// Token-id form. Sentences keep their true length (<= max_words); the
/// encoder pads to k internally.
struct Sample {
  std::vector<std::vector<int>> story;
  std::vector<int> question;
  int answer = 0;
  int task_id = 0;
  std::string entity;
};

Sample encode_sample(const TextSample& ts, const Vocabulary& vocab, int max_words);
std::vector<Sample> encode_samples(const std::vector<TextSample>& ts,
                                   const Vocabulary& vocab, int max_words);

/// A training batch: stories padded with all-PAD sentences to the batch
/// maximum, plus the per-timestep validity mask (1 for real sentences,
/// 0 for padding). Masked steps must contribute exactly zero state change.
struct Batch {
  std::vector<Sample> samples;
  std::vector<std::vector<double>> mask;
  int story_len = 0;
};

/// Reshuffles the sample order every epoch with its own seeded engine;
/// the final short batch of an epoch is emitted rather than dropped.
class BatchStream {
 public:
  BatchStream(std::vector<Sample> samples, int batch_size, uint64_t seed);
  Batch next();
  long epochs_completed() const { return epochs_; }

 private:
  std::vector<Sample> samples_;
  std::vector<size_t> order_;
  size_t cursor_ = 0;
  int batch_size_;
  std::mt19937_64 rng_;
  long epochs_ = 0;

  void reshuffle();
};

Batch make_batch(const std::vector<const Sample*>& samples);

// --- systematic-generalization augmentation ----------------------------------

struct AugmentSpec {
  std::vector<std::string> entities{"alex", "glenn", "jordan", "mike", "logan"};
  std::vector<std::string> base_entities{"mary", "john", "daniel", "sandra"};
  std::vector<int> task_pool{1, 6, 7, 8, 9, 11, 12, 13};
  int pairs_per_cell = 500;
  double question_fraction = 0.2;  // enforced exactly per cell
  std::vector<int> train_task_counts{8, 6, 4, 2, 1};
  uint64_t seed = 0;
};

struct TaskSplits {
  std::vector<TextSample> train, test;
};

struct AugmentResult {
  std::vector<TextSample> extra_train;
  std::vector<TextSample> extra_test;
  std::map<std::string, std::vector<int>> train_tasks;  // entity -> task subset
};

/// Every (entity, task) cell contributes pairs_per_cell rewritten pairs to
/// the test side; the train side only gets the per-entity task subsets
/// drawn by the seeded engine. Each rewrite renames one uniformly chosen
/// original entity consistently through story, question, and answer.
AugmentResult augment_systematic(const std::map<int, TaskSplits>& base,
                                 const AugmentSpec& spec);

/// Writes samples back out in bAbI line format (one story per sample,
/// question last) so parse_task_file round-trips them.
void write_babi_file(const std::string& path,
                     const std::vector<TextSample>& samples);

}  // namespace tprnn
