#pragma once

#include <string>

#include "tprnn/encoder.hpp"
#include "tprnn/model.hpp"

namespace tprnn {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Binary container, all integers little-endian:
///   magic "TPRRNN1\0"
///   u32 tensor count, then per tensor:
///     u32 name length, name bytes, u8 order, u32 per dim, f64 per entry
///   u32 token count, then per token: u32 length, bytes (index 0 is PAD)
///   u32 config length, config bytes (UTF-8 JSON)
/// Saving, loading, and saving again yields byte-identical files.
void checkpoint_save(const std::string& path, ModelParams& params,
                     const Vocabulary& vocab, const std::string& config_json);

struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
  std::string config_json;
  int max_words = 0;
};

Checkpoint checkpoint_load(const std::string& path);

}  // namespace tprnn
