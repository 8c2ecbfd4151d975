#include "tprnn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "json.hpp"

namespace tprnn {

namespace {

constexpr char kMagic[8] = {'T', 'P', 'R', 'R', 'N', 'N', '1', '\0'};

void put_u32(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void put_f64(std::ostream& out, double d) {
  const uint64_t v = std::bit_cast<uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw CheckpointError("checkpoint truncated");
  }
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) {
    throw CheckpointError("checkpoint truncated");
  }
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

std::string get_str(std::istream& in) {
  const uint32_t len = get_u32(in);
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) {
    throw CheckpointError("checkpoint truncated");
  }
  return s;
}

void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

}  // namespace

void checkpoint_save(const std::string& path, ModelParams& params,
                     const Vocabulary& vocab, const std::string& config_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  const auto all = params.all();
  put_u32(out, static_cast<uint32_t>(all.size()));
  for (const Param* p : all) {
    put_str(out, p->name);
    const Tensor& t = p->value;
    out.put(static_cast<char>(t.order()));
    for (int d : t.dims()) put_u32(out, static_cast<uint32_t>(d));
    for (int i = 0; i < t.size(); ++i) put_f64(out, t[i]);
  }
  put_u32(out, static_cast<uint32_t>(vocab.size()));
  for (const auto& tok : vocab.tokens()) put_str(out, tok);
  put_str(out, config_json);
  if (!out) throw CheckpointError("write failure: " + path);
}

Checkpoint checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointError("bad checkpoint magic");
  }
  const uint32_t count = get_u32(in);
  std::map<std::string, Tensor> tensors;
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = get_str(in);
    const int order = in.get();
    if (order < 1 || order > 3) throw CheckpointError("bad tensor order");
    std::vector<int> dims;
    size_t numel = 1;
    for (int d = 0; d < order; ++d) {
      const uint32_t dim = get_u32(in);
      if (dim == 0) throw CheckpointError("bad tensor dim");
      dims.push_back(static_cast<int>(dim));
      numel *= dim;
    }
    std::vector<double> data(numel);
    for (size_t j = 0; j < numel; ++j) data[j] = get_f64(in);
    tensors.emplace(name, Tensor(dims, std::move(data)));
  }

  Checkpoint ck;
  const uint32_t n_tokens = get_u32(in);
  for (uint32_t i = 0; i < n_tokens; ++i) {
    const std::string tok = get_str(in);
    if (i == 0) {
      if (tok != Vocabulary::kPadToken) throw CheckpointError("vocab missing PAD");
      continue;  // constructor installs PAD at id 0
    }
    ck.vocab.add(tok);
  }
  ck.config_json = get_str(in);

  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(ck.config_json);
  } catch (const nlohmann::json::exception&) {
    throw CheckpointError("unparsable checkpoint config blob");
  }
  ModelDims dims;
  dims.vocab = cfg.at("dim_symbol").get<int>();
  dims.hidden = cfg.at("dim_hidden").get<int>();
  dims.entity = cfg.at("dim_entity").get<int>();
  dims.relation = cfg.at("dim_relation").get<int>();
  ck.max_words = cfg.at("max_words").get<int>();
  if (dims.vocab != ck.vocab.size()) {
    throw CheckpointError("vocabulary size does not match config");
  }

  ck.params = init_model(dims, ck.max_words, 0);
  for (Param* p : ck.params.all()) {
    auto it = tensors.find(p->name);
    if (it == tensors.end()) {
      throw CheckpointError("checkpoint missing tensor: " + p->name);
    }
    if (it->second.dims() != p->value.dims()) {
      throw CheckpointError("tensor " + p->name + " has dims " +
                            it->second.shape_str() + ", config expects " +
                            p->value.shape_str());
    }
    p->value = std::move(it->second);
    tensors.erase(it);
  }
  if (!tensors.empty()) {
    throw CheckpointError("checkpoint has unexpected tensor: " +
                          tensors.begin()->first);
  }
  return ck;
}

}  // namespace tprnn
