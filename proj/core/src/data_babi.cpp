#include "tprnn/data_babi.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tprnn {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string word;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else {
      if (!word.empty()) {
        tokens.push_back(word);
        word.clear();
      }
      if (!std::isspace(c)) tokens.push_back(std::string(1, ch));
    }
  }
  if (!word.empty()) tokens.push_back(word);
  return tokens;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

namespace {

std::string lower_trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_tabs(const std::string& s) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t pos = s.find('\t', start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::vector<TextSample> parse_task_stream(std::istream& in, int task_id) {
  std::vector<TextSample> samples;
  std::vector<std::vector<std::string>> statements;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0) {
      throw std::runtime_error("malformed line " + std::to_string(line_no) +
                               ": no leading integer id");
    }
    int id = 0;
    for (size_t i = 0; i < sp; ++i) {
      const char c = line[i];
      if (c < '0' || c > '9') {
        throw std::runtime_error("malformed line " + std::to_string(line_no) +
                                 ": no leading integer id");
      }
      id = id * 10 + (c - '0');
    }
    if (id == 1) statements.clear();
    const std::string rest = line.substr(sp + 1);
    if (rest.find('\t') != std::string::npos) {
      const auto parts = split_tabs(rest);
      if (parts.size() < 2 || lower_trim(parts[1]).empty()) {
        throw std::runtime_error("question without answer field at line " +
                                 std::to_string(line_no));
      }
      TextSample s;
      s.story = statements;
      s.question = tokenize(parts[0]);
      s.answer = lower_trim(parts[1]);  // atomic, commas preserved
      s.task_id = task_id;
      samples.push_back(std::move(s));
      // supporting-fact ids in parts[2] are discarded
    } else {
      statements.push_back(tokenize(rest));
    }
  }
  return samples;
}

std::vector<TextSample> parse_task_file(const std::string& path, int task_id) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return parse_task_stream(in, task_id);
}

VocabInfo build_vocab(const std::vector<const std::vector<TextSample>*>& sets) {
  std::set<std::string> tokens;
  int max_words = 0;
  for (const auto* set : sets) {
    for (const TextSample& s : *set) {
      for (const auto& sentence : s.story) {
        tokens.insert(sentence.begin(), sentence.end());
        max_words = std::max(max_words, static_cast<int>(sentence.size()));
      }
      tokens.insert(s.question.begin(), s.question.end());
      max_words = std::max(max_words, static_cast<int>(s.question.size()));
      tokens.insert(s.answer);
    }
  }
  VocabInfo info;
  info.max_words = max_words;
  for (const auto& t : tokens) info.vocab.add(t);
  return info;
}

VocabInfo build_vocab(const std::vector<TextSample>& samples) {
  return build_vocab(std::vector<const std::vector<TextSample>*>{&samples});
}

Sample encode_sample(const TextSample& ts, const Vocabulary& vocab, int max_words) {
  auto encode_sentence_ids = [&](const std::vector<std::string>& sentence) {
    if (static_cast<int>(sentence.size()) > max_words) {
      throw std::invalid_argument("sentence longer than max_words: " +
                                  detokenize(sentence));
    }
    std::vector<int> ids;
    ids.reserve(sentence.size());
    for (const auto& t : sentence) ids.push_back(vocab.id(t));
    return ids;
  };
  Sample s;
  s.story.reserve(ts.story.size());
  for (const auto& sentence : ts.story) s.story.push_back(encode_sentence_ids(sentence));
  s.question = encode_sentence_ids(ts.question);
  s.answer = vocab.id(ts.answer);
  s.task_id = ts.task_id;
  s.entity = ts.entity;
  return s;
}

std::vector<Sample> encode_samples(const std::vector<TextSample>& ts,
                                   const Vocabulary& vocab, int max_words) {
  std::vector<Sample> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(encode_sample(t, vocab, max_words));
  return out;
}

Batch make_batch(const std::vector<const Sample*>& samples) {
  Batch b;
  b.samples.reserve(samples.size());
  int max_len = 0;
  for (const Sample* s : samples) {
    max_len = std::max(max_len, static_cast<int>(s->story.size()));
  }
  b.story_len = max_len;
  for (const Sample* s : samples) {
    Sample padded = *s;
    std::vector<double> mask(static_cast<size_t>(max_len), 1.0);
    for (int t = static_cast<int>(s->story.size()); t < max_len; ++t) {
      padded.story.emplace_back();  // all-PAD sentence
      mask[static_cast<size_t>(t)] = 0.0;
    }
    b.samples.push_back(std::move(padded));
    b.mask.push_back(std::move(mask));
  }
  return b;
}

BatchStream::BatchStream(std::vector<Sample> samples, int batch_size, uint64_t seed)
    : samples_(std::move(samples)), batch_size_(batch_size), rng_(seed) {
  if (samples_.empty()) throw std::invalid_argument("BatchStream: no samples");
  if (batch_size_ < 1) throw std::invalid_argument("BatchStream: bad batch size");
  order_.resize(samples_.size());
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  reshuffle();
}

void BatchStream::reshuffle() {
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

Batch BatchStream::next() {
  if (cursor_ >= order_.size()) {
    ++epochs_;
    reshuffle();
  }
  std::vector<const Sample*> picked;
  while (cursor_ < order_.size() &&
         static_cast<int>(picked.size()) < batch_size_) {
    picked.push_back(&samples_[order_[cursor_++]]);
  }
  return make_batch(picked);
}

// --- augmentation -------------------------------------------------------------

namespace {

bool contains_token(const std::vector<std::string>& tokens, const std::string& t) {
  return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
}

bool story_contains(const TextSample& s, const std::string& t) {
  for (const auto& sentence : s.story) {
    if (contains_token(sentence, t)) return true;
  }
  return false;
}

TextSample rewrite_entity(const TextSample& s, const std::string& from,
                          const std::string& to) {
  TextSample out = s;
  for (auto& sentence : out.story) {
    for (auto& tok : sentence) {
      if (tok == from) tok = to;
    }
  }
  for (auto& tok : out.question) {
    if (tok == from) tok = to;
  }
  if (out.answer == from) out.answer = to;
  out.entity = to;
  return out;
}

/// Draws pairs_per_cell rewritten samples from `pool` for one
/// (entity, task) cell with the question-containment quota met exactly.
std::vector<TextSample> rewrite_cell(const std::vector<TextSample>& pool,
                                     const std::string& entity,
                                     const AugmentSpec& spec,
                                     std::mt19937_64& rng) {
  const int total = spec.pairs_per_cell;
  int quota_q = static_cast<int>(std::lround(spec.question_fraction * total));
  int quota_plain = total - quota_q;

  std::vector<size_t> order(pool.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<TextSample> out;
  out.reserve(static_cast<size_t>(total));
  for (size_t oi = 0; oi < order.size() && (quota_q > 0 || quota_plain > 0); ++oi) {
    const TextSample& s = pool[order[oi]];
    std::vector<std::string> in_story, in_both;
    for (const auto& base : spec.base_entities) {
      if (!story_contains(s, base)) continue;
      if (contains_token(s.question, base)) {
        in_both.push_back(base);
      } else {
        in_story.push_back(base);
      }
    }
    if (quota_plain > 0 && !in_story.empty()) {
      std::uniform_int_distribution<size_t> pick(0, in_story.size() - 1);
      out.push_back(rewrite_entity(s, in_story[pick(rng)], entity));
      --quota_plain;
    } else if (quota_q > 0 && !in_both.empty()) {
      std::uniform_int_distribution<size_t> pick(0, in_both.size() - 1);
      out.push_back(rewrite_entity(s, in_both[pick(rng)], entity));
      --quota_q;
    }
  }
  if (quota_q > 0 || quota_plain > 0) {
    throw std::runtime_error("augment: base pool too small for entity '" +
                             entity + "'");
  }
  return out;
}

}  // namespace

AugmentResult augment_systematic(const std::map<int, TaskSplits>& base,
                                 const AugmentSpec& spec) {
  if (spec.entities.size() != spec.train_task_counts.size()) {
    throw std::invalid_argument("augment: one train-task count per entity");
  }
  for (int task : spec.task_pool) {
    if (!base.count(task)) {
      throw std::invalid_argument("augment: task " + std::to_string(task) +
                                  " missing from base data");
    }
  }
  // New entity names must not collide with any existing token.
  std::set<std::string> existing;
  for (const auto& [task, splits] : base) {
    for (const auto* split : {&splits.train, &splits.test}) {
      for (const TextSample& s : *split) {
        for (const auto& sentence : s.story) {
          existing.insert(sentence.begin(), sentence.end());
        }
        existing.insert(s.question.begin(), s.question.end());
        existing.insert(s.answer);
      }
    }
  }
  for (const auto& e : spec.entities) {
    if (existing.count(e)) {
      throw std::invalid_argument("augment: entity '" + e +
                                  "' collides with existing vocabulary");
    }
  }

  std::mt19937_64 rng(spec.seed);
  AugmentResult result;

  // Per-entity task subsets, drawn without replacement.
  for (size_t ei = 0; ei < spec.entities.size(); ++ei) {
    std::vector<int> pool = spec.task_pool;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(static_cast<size_t>(spec.train_task_counts[ei]));
    std::sort(pool.begin(), pool.end());
    result.train_tasks[spec.entities[ei]] = pool;
  }

  // All 40 cells go to the test side.
  for (const auto& entity : spec.entities) {
    for (int task : spec.task_pool) {
      auto cell = rewrite_cell(base.at(task).test, entity, spec, rng);
      result.extra_test.insert(result.extra_test.end(),
                               std::make_move_iterator(cell.begin()),
                               std::make_move_iterator(cell.end()));
    }
  }
  // Only the chosen subsets go to the train side.
  for (const auto& entity : spec.entities) {
    for (int task : result.train_tasks.at(entity)) {
      auto cell = rewrite_cell(base.at(task).train, entity, spec, rng);
      result.extra_train.insert(result.extra_train.end(),
                                std::make_move_iterator(cell.begin()),
                                std::make_move_iterator(cell.end()));
    }
  }
  return result;
}

void write_babi_file(const std::string& path,
                     const std::vector<TextSample>& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  for (const TextSample& s : samples) {
    int id = 1;
    for (const auto& sentence : s.story) {
      out << id++ << ' ' << detokenize(sentence) << '\n';
    }
    out << id << ' ' << detokenize(s.question) << '\t' << s.answer << '\n';
  }
}

}  // namespace tprnn
