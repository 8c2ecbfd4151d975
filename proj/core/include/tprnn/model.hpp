#pragma once

#include <cstdint>
#include <vector>

#include "tprnn/autodiff.hpp"
#include "tprnn/encoder.hpp"
#include "tprnn/tensor.hpp"

namespace tprnn {

/// Two-layer perceptron: x -> tanh(W2 * tanh(W1 * x + b1) + b2).
struct MlpParams {
  Param W1, b1, W2, b2;
  std::vector<Param*> all() { return {&W1, &b1, &W2, &b2}; }
};

/// Scalar gain/shift layer normalization, one independent pair per
/// inference step. gamma starts at 1, beta at 0.
struct LayerNormParams {
  Param gamma, beta;
  static constexpr double kEpsilon = 1e-6;
  std::vector<Param*> all() { return {&gamma, &beta}; }
};

/// Which memory operations contribute to the state update.
struct AblationConfig {
  bool use_write = true;
  bool use_move = true;
  bool use_backlink = true;
};

struct ModelDims {
  int vocab = 0;     // == dim_symbol
  int hidden = 0;
  int entity = 0;
  int relation = 0;
};

/// All trainable state: the encoder, five update MLPs, four query MLPs,
/// three layer norms, and the output projection Z.
struct ModelParams {
  ModelDims dims;
  EncoderParams encoder;
  MlpParams f_e1, f_e2;           // sentence -> entity
  MlpParams f_r1, f_r2, f_r3;     // sentence -> relation
  MlpParams f_n;                  // question -> entity
  MlpParams f_l1, f_l2, f_l3;     // question -> relation
  LayerNormParams ln1, ln2, ln3;  // one per inference step
  Param proj;                     // Z: vocab x entity, no bias

  /// Canonical parameter order; drives the optimizer, the gradient
  /// checks, and the checkpoint layout.
  std::vector<Param*> all();
};

ModelParams init_model(const ModelDims& dims, int max_words, uint64_t seed);

// --- pure (tensor-in, tensor-out) forward path ------------------------------

Tensor mlp_forward(const Tensor& x, const MlpParams& p);

struct UpdateReps {
  Tensor e1, e2, r1, r2, r3;
};
UpdateReps update_reps(const Tensor& s, const ModelParams& p);

struct WriteDelta {
  Tensor W;
  Tensor w_hat;
};
/// w_hat = unbind3(F, e1, r1); W = outer3(e1, r1, e2 - w_hat), i.e. the
/// stored target is subtracted and the new one written in its place.
WriteDelta write_delta(const Tensor& F, const Tensor& e1, const Tensor& r1,
                       const Tensor& e2);

/// Re-files the displaced target w_hat under relation r2. w_hat must come
/// from write_delta on the same pre-update F.
Tensor move_delta(const Tensor& F, const Tensor& e1, const Tensor& r2,
                  const Tensor& w_hat);

/// Stores the reversed edge (e2, r3, e1).
Tensor backlink_delta(const Tensor& F, const Tensor& e1, const Tensor& e2,
                      const Tensor& r3);

/// One recurrent update: all retrievals read F_{t-1}; the enabled deltas
/// are summed and added element-wise.
Tensor step(const Tensor& F_prev, const Tensor& s_t, const ModelParams& p,
            const AblationConfig& ab);

/// Full write+move+backlink update from explicit representations,
/// bypassing the MLPs; retrievals read F_prev.
Tensor step_from_reps(const Tensor& F_prev, const Tensor& e1, const Tensor& e2,
                      const Tensor& r1, const Tensor& r2, const Tensor& r3);

Tensor layer_norm(const Tensor& x, const LayerNormParams& p);

/// Three chained unbinding steps with layer norm, summed and projected to
/// vocabulary logits.
Tensor infer(const Tensor& F, const Tensor& s_q, const ModelParams& p);

double loss(const Tensor& logits, int answer_id);
Tensor softmax(const Tensor& logits);
int argmax(const Tensor& v);

using Story = std::vector<std::vector<int>>;  // token-id sentences

/// Runs the update module over the whole story from the zero state.
Tensor story_state(const Story& story, const ModelParams& p,
                   const AblationConfig& ab);

/// Padded-story variant: each delta is scaled by its mask entry, so steps
/// with mask 0 contribute exactly zero state change.
Tensor story_state_masked(const Story& story, const std::vector<double>& mask,
                          const ModelParams& p, const AblationConfig& ab);

Tensor forward_logits(const Story& story, const std::vector<int>& question,
                      const ModelParams& p, const AblationConfig& ab);

// --- tape (training) forward path -------------------------------------------

struct MlpVars {
  Var W1, b1, W2, b2;
};

struct ModelVars {
  Var emb, pos;
  MlpVars e1, e2, r1, r2, r3, n, l1, l2, l3;
  Var ln1g, ln1b, ln2g, ln2b, ln3g, ln3b;
  Var proj;
};

ModelVars bind_model(Tape& t, ModelParams& p);

Var mlp_apply(Tape& t, const MlpVars& m, Var x);
Var step_tape(Tape& t, Var F, Var s, const ModelVars& m, const AblationConfig& ab);
Var infer_tape(Tape& t, Var F, Var s_q, const ModelVars& m);

/// Full per-sample graph: encode story, run updates, infer, cross-entropy.
Var sample_loss_tape(Tape& t, const ModelVars& m, const ModelDims& dims,
                     const Story& story, const std::vector<int>& question,
                     int answer_id, const AblationConfig& ab);

}  // namespace tprnn
