#include "tprnn/encoder.hpp"

#include <stdexcept>

namespace tprnn {

Vocabulary::Vocabulary() {
  id_to_token_.push_back(kPadToken);
  token_to_id_[kPadToken] = kPadId;
}

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  const int id = size();
  id_to_token_.push_back(token);
  token_to_id_[token] = id;
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) {
    throw std::invalid_argument("unknown token: " + token);
  }
  return it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

EncoderParams init_encoder(int vocab_size, int dim_symbol, int k,
                           std::mt19937_64& rng) {
  if (vocab_size < 1 || dim_symbol < 1 || k < 1) {
    throw std::invalid_argument("init_encoder: all dims must be positive");
  }
  EncoderParams p;
  Tensor emb({vocab_size, dim_symbol});
  std::uniform_real_distribution<double> dist(-0.01, 0.01);
  for (int i = 1; i < vocab_size; ++i) {  // row 0 (PAD) stays zero
    for (int j = 0; j < dim_symbol; ++j) emb.at(i, j) = dist(rng);
  }
  Tensor pos({k, dim_symbol});
  const double inv_k = 1.0 / static_cast<double>(k);
  for (int i = 0; i < pos.size(); ++i) pos[i] = inv_k;
  p.embeddings = Param("embeddings", std::move(emb));
  p.positions = Param("positions", std::move(pos));
  return p;
}

namespace {

std::vector<int> padded_ids(const std::vector<int>& word_ids, int k) {
  if (static_cast<int>(word_ids.size()) > k) {
    throw std::invalid_argument("sentence longer than the position count k");
  }
  std::vector<int> ids(static_cast<size_t>(k), Vocabulary::kPadId);
  std::copy(word_ids.begin(), word_ids.end(), ids.begin());
  return ids;
}

}  // namespace

Tensor encode_sentence(const std::vector<int>& word_ids, const EncoderParams& p) {
  const int k = p.max_words();
  const int d = p.dim_symbol();
  const auto ids = padded_ids(word_ids, k);
  Tensor s({d});
  for (int i = 0; i < k; ++i) {
    const int row = ids[static_cast<size_t>(i)];
    for (int j = 0; j < d; ++j) {
      s[j] += p.embeddings.value.at(row, j) * p.positions.value.at(i, j);
    }
  }
  if (!s.all_finite()) throw NonFiniteError("encode_sentence non-finite result");
  return s;
}

Var encode_sentence(Tape& t, Var emb, Var pos, const std::vector<int>& word_ids) {
  const int k = t.value(pos).dim(0);
  const auto ids = padded_ids(word_ids, k);
  Var d = t.embedding_gather(emb, ids);
  return t.sum_rows(t.hadamard(d, pos));
}

void mask_pad_gradient(EncoderParams& p) {
  const int d = p.dim_symbol();
  for (int j = 0; j < d; ++j) p.embeddings.grad.at(Vocabulary::kPadId, j) = 0.0;
}

}  // namespace tprnn
