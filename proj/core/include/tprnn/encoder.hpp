#pragma once

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "tprnn/autodiff.hpp"
#include "tprnn/tensor.hpp"

namespace tprnn {

/// Token <-> id mapping. Id 0 is always the padding symbol; PAD never
/// appears as a gold answer.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr const char* kPadToken = "<pad>";

  Vocabulary();

  int add(const std::string& token);  // returns existing id if present
  int id(const std::string& token) const;  // throws on unknown token
  bool contains(const std::string& token) const;
  const std::string& token(int id) const { return id_to_token_[static_cast<size_t>(id)]; }
  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

/// Word embedding table plus the learned position vectors shared by all
/// sentences. Row 0 of the embedding table (PAD) is pinned to zero; its
/// gradient is masked so it never moves.
struct EncoderParams {
  Param embeddings;  // vocab_size x dim_symbol
  Param positions;   // k x dim_symbol, every entry starts at 1/k

  int max_words() const { return positions.value.dim(0); }
  int dim_symbol() const { return positions.value.dim(1); }
  std::vector<Param*> all() { return {&embeddings, &positions}; }
};

/// Embeddings ~ U(-0.01, 0.01) with the PAD row zeroed; each position
/// vector is ones divided by k.
EncoderParams init_encoder(int vocab_size, int dim_symbol, int k,
                           std::mt19937_64& rng);

/// s = sum_i d_i (*) p_i over the padded sentence. Word ids beyond the
/// given sequence are treated as PAD, which contributes nothing, so
/// appending padding never changes the result.
Tensor encode_sentence(const std::vector<int>& word_ids, const EncoderParams& p);

/// Tape version of encode_sentence; emb/pos are leaves bound on `t`.
Var encode_sentence(Tape& t, Var emb, Var pos, const std::vector<int>& word_ids);

/// Zeroes the PAD-row gradient so the optimizer leaves it untouched.
void mask_pad_gradient(EncoderParams& p);

}  // namespace tprnn
