#include "tprnn/model.hpp"

#include <cmath>
#include <stdexcept>

namespace tprnn {

std::vector<Param*> ModelParams::all() {
  std::vector<Param*> out;
  auto append = [&out](std::vector<Param*> v) {
    out.insert(out.end(), v.begin(), v.end());
  };
  append(encoder.all());
  for (MlpParams* m : {&f_e1, &f_e2, &f_r1, &f_r2, &f_r3, &f_n, &f_l1, &f_l2, &f_l3}) {
    append(m->all());
  }
  for (LayerNormParams* ln : {&ln1, &ln2, &ln3}) append(ln->all());
  out.push_back(&proj);
  return out;
}

namespace {

Tensor glorot(int rows, int cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor w({rows, cols});
  for (int i = 0; i < w.size(); ++i) w[i] = dist(rng);
  return w;
}

MlpParams init_mlp(const std::string& name, int in, int hidden, int out,
                   std::mt19937_64& rng) {
  MlpParams m;
  m.W1 = Param(name + ".W1", glorot(hidden, in, rng));
  m.b1 = Param(name + ".b1", Tensor({hidden}));
  m.W2 = Param(name + ".W2", glorot(out, hidden, rng));
  m.b2 = Param(name + ".b2", Tensor({out}));
  return m;
}

LayerNormParams init_ln(const std::string& name) {
  LayerNormParams ln;
  ln.gamma = Param(name + ".gamma", Tensor::scalar(1.0));
  ln.beta = Param(name + ".beta", Tensor::scalar(0.0));
  return ln;
}

void check_ablation(const AblationConfig& ab) {
  if (!ab.use_write && !ab.use_move && !ab.use_backlink) {
    throw std::invalid_argument("at least one memory operation must be enabled");
  }
}

}  // namespace

ModelParams init_model(const ModelDims& dims, int max_words, uint64_t seed) {
  if (dims.vocab < 2 || dims.hidden < 1 || dims.entity < 2 || dims.relation < 2) {
    throw std::invalid_argument("init_model: invalid dimensions");
  }
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.dims = dims;
  p.encoder = init_encoder(dims.vocab, dims.vocab, max_words, rng);
  p.f_e1 = init_mlp("f_e1", dims.vocab, dims.hidden, dims.entity, rng);
  p.f_e2 = init_mlp("f_e2", dims.vocab, dims.hidden, dims.entity, rng);
  p.f_r1 = init_mlp("f_r1", dims.vocab, dims.hidden, dims.relation, rng);
  p.f_r2 = init_mlp("f_r2", dims.vocab, dims.hidden, dims.relation, rng);
  p.f_r3 = init_mlp("f_r3", dims.vocab, dims.hidden, dims.relation, rng);
  p.f_n = init_mlp("f_n", dims.vocab, dims.hidden, dims.entity, rng);
  p.f_l1 = init_mlp("f_l1", dims.vocab, dims.hidden, dims.relation, rng);
  p.f_l2 = init_mlp("f_l2", dims.vocab, dims.hidden, dims.relation, rng);
  p.f_l3 = init_mlp("f_l3", dims.vocab, dims.hidden, dims.relation, rng);
  p.ln1 = init_ln("ln1");
  p.ln2 = init_ln("ln2");
  p.ln3 = init_ln("ln3");
  p.proj = Param("Z", glorot(dims.vocab, dims.entity, rng));
  return p;
}

Tensor mlp_forward(const Tensor& x, const MlpParams& p) {
  Tensor h = add(unbind2(p.W1.value, x), p.b1.value);
  for (int i = 0; i < h.size(); ++i) h[i] = std::tanh(h[i]);
  Tensor out = add(unbind2(p.W2.value, h), p.b2.value);
  for (int i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return out;
}

UpdateReps update_reps(const Tensor& s, const ModelParams& p) {
  return UpdateReps{mlp_forward(s, p.f_e1), mlp_forward(s, p.f_e2),
                    mlp_forward(s, p.f_r1), mlp_forward(s, p.f_r2),
                    mlp_forward(s, p.f_r3)};
}

WriteDelta write_delta(const Tensor& F, const Tensor& e1, const Tensor& r1,
                       const Tensor& e2) {
  Tensor w_hat = unbind3(F, e1, r1);
  Tensor W = outer3(e1, r1, sub(e2, w_hat));
  return WriteDelta{std::move(W), std::move(w_hat)};
}

Tensor move_delta(const Tensor& F, const Tensor& e1, const Tensor& r2,
                  const Tensor& w_hat) {
  Tensor m_hat = unbind3(F, e1, r2);
  return outer3(e1, r2, sub(w_hat, m_hat));
}

Tensor backlink_delta(const Tensor& F, const Tensor& e1, const Tensor& e2,
                      const Tensor& r3) {
  Tensor b_hat = unbind3(F, e2, r3);
  return outer3(e2, r3, sub(e1, b_hat));
}

namespace {

Tensor step_delta(const Tensor& F_prev, const Tensor& s_t, const ModelParams& p,
                  const AblationConfig& ab) {
  check_ablation(ab);
  const UpdateReps u = update_reps(s_t, p);
  const WriteDelta wd = write_delta(F_prev, u.e1, u.r1, u.e2);
  const Tensor M = move_delta(F_prev, u.e1, u.r2, wd.w_hat);
  const Tensor B = backlink_delta(F_prev, u.e1, u.e2, u.r3);
  Tensor delta;
  if (ab.use_write) delta = wd.W;
  if (ab.use_move) delta = delta.empty() ? M : add(delta, M);
  if (ab.use_backlink) delta = delta.empty() ? B : add(delta, B);
  return delta;
}

}  // namespace

Tensor step(const Tensor& F_prev, const Tensor& s_t, const ModelParams& p,
            const AblationConfig& ab) {
  return add(F_prev, step_delta(F_prev, s_t, p, ab));
}

Tensor step_from_reps(const Tensor& F_prev, const Tensor& e1, const Tensor& e2,
                      const Tensor& r1, const Tensor& r2, const Tensor& r3) {
  const WriteDelta wd = write_delta(F_prev, e1, r1, e2);
  const Tensor M = move_delta(F_prev, e1, r2, wd.w_hat);
  const Tensor B = backlink_delta(F_prev, e1, e2, r3);
  return add(F_prev, add(add(wd.W, M), B));
}

Tensor layer_norm(const Tensor& x, const LayerNormParams& p) {
  if (x.order() != 1 || x.size() < 2) {
    throw std::invalid_argument("layer_norm expects a vector of size >= 2");
  }
  const int n = x.size();
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += x[i];
  mean /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
  var /= n;
  const double inv_std = 1.0 / std::sqrt(var + LayerNormParams::kEpsilon);
  const double gamma = p.gamma.value.at(0);
  const double beta = p.beta.value.at(0);
  Tensor out({n});
  for (int i = 0; i < n; ++i) out[i] = gamma * ((x[i] - mean) * inv_std) + beta;
  if (!out.all_finite()) throw NonFiniteError("layer_norm non-finite result");
  return out;
}

Tensor infer(const Tensor& F, const Tensor& s_q, const ModelParams& p) {
  const Tensor n = mlp_forward(s_q, p.f_n);
  const Tensor l1 = mlp_forward(s_q, p.f_l1);
  const Tensor l2 = mlp_forward(s_q, p.f_l2);
  const Tensor l3 = mlp_forward(s_q, p.f_l3);
  const Tensor i1 = layer_norm(unbind3(F, n, l1), p.ln1);
  const Tensor i2 = layer_norm(unbind3(F, i1, l2), p.ln2);
  const Tensor i3 = layer_norm(unbind3(F, i2, l3), p.ln3);
  return unbind2(p.proj.value, add(add(i1, i2), i3));
}

double loss(const Tensor& logits, int answer_id) {
  if (logits.order() != 1) throw std::invalid_argument("loss expects a vector");
  if (answer_id <= 0 || answer_id >= logits.size()) {
    throw std::invalid_argument("loss: answer id out of range (PAD excluded)");
  }
  const int n = logits.size();
  double mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += std::exp(logits[i] - mx);
  const double lse = mx + std::log(z);
  const double out = lse - logits[answer_id];
  if (!std::isfinite(out)) throw NonFiniteError("loss non-finite");
  return out;
}

Tensor softmax(const Tensor& logits) {
  const int n = logits.size();
  double mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += std::exp(logits[i] - mx);
  Tensor out({n});
  for (int i = 0; i < n; ++i) out[i] = std::exp(logits[i] - mx) / z;
  return out;
}

int argmax(const Tensor& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Tensor story_state(const Story& story, const ModelParams& p,
                   const AblationConfig& ab) {
  Tensor F({p.dims.entity, p.dims.relation, p.dims.entity});
  for (const auto& sentence : story) {
    F = step(F, encode_sentence(sentence, p.encoder), p, ab);
  }
  return F;
}

Tensor story_state_masked(const Story& story, const std::vector<double>& mask,
                          const ModelParams& p, const AblationConfig& ab) {
  if (story.size() != mask.size()) {
    throw std::invalid_argument("story_state_masked: mask length mismatch");
  }
  Tensor F({p.dims.entity, p.dims.relation, p.dims.entity});
  for (size_t t = 0; t < story.size(); ++t) {
    const Tensor delta = step_delta(F, encode_sentence(story[t], p.encoder), p, ab);
    F = add(F, scale(delta, mask[t]));
  }
  return F;
}

Tensor forward_logits(const Story& story, const std::vector<int>& question,
                      const ModelParams& p, const AblationConfig& ab) {
  const Tensor F = story_state(story, p, ab);
  return infer(F, encode_sentence(question, p.encoder), p);
}

// --- tape path ---------------------------------------------------------------

ModelVars bind_model(Tape& t, ModelParams& p) {
  auto bind_mlp = [&t](MlpParams& m) {
    return MlpVars{t.leaf(m.W1), t.leaf(m.b1), t.leaf(m.W2), t.leaf(m.b2)};
  };
  ModelVars v;
  v.emb = t.leaf(p.encoder.embeddings);
  v.pos = t.leaf(p.encoder.positions);
  v.e1 = bind_mlp(p.f_e1);
  v.e2 = bind_mlp(p.f_e2);
  v.r1 = bind_mlp(p.f_r1);
  v.r2 = bind_mlp(p.f_r2);
  v.r3 = bind_mlp(p.f_r3);
  v.n = bind_mlp(p.f_n);
  v.l1 = bind_mlp(p.f_l1);
  v.l2 = bind_mlp(p.f_l2);
  v.l3 = bind_mlp(p.f_l3);
  v.ln1g = t.leaf(p.ln1.gamma);
  v.ln1b = t.leaf(p.ln1.beta);
  v.ln2g = t.leaf(p.ln2.gamma);
  v.ln2b = t.leaf(p.ln2.beta);
  v.ln3g = t.leaf(p.ln3.gamma);
  v.ln3b = t.leaf(p.ln3.beta);
  v.proj = t.leaf(p.proj);
  return v;
}

Var mlp_apply(Tape& t, const MlpVars& m, Var x) {
  return t.tanh(t.affine(m.W2, t.tanh(t.affine(m.W1, x, m.b1)), m.b2));
}

Var step_tape(Tape& t, Var F, Var s, const ModelVars& m, const AblationConfig& ab) {
  check_ablation(ab);
  Var e1 = mlp_apply(t, m.e1, s);
  Var e2 = mlp_apply(t, m.e2, s);
  Var r1 = mlp_apply(t, m.r1, s);
  Var r2 = mlp_apply(t, m.r2, s);
  Var r3 = mlp_apply(t, m.r3, s);
  Var w_hat = t.unbind3(F, e1, r1);
  Var m_hat = t.unbind3(F, e1, r2);
  Var b_hat = t.unbind3(F, e2, r3);
  Var W = t.outer3(e1, r1, t.sub(e2, w_hat));
  Var M = t.outer3(e1, r2, t.sub(w_hat, m_hat));
  Var B = t.outer3(e2, r3, t.sub(e1, b_hat));
  Var delta{};
  if (ab.use_write) delta = W;
  if (ab.use_move) delta = delta.tape ? t.add(delta, M) : M;
  if (ab.use_backlink) delta = delta.tape ? t.add(delta, B) : B;
  return t.add(F, delta);
}

Var infer_tape(Tape& t, Var F, Var s_q, const ModelVars& m) {
  Var n = mlp_apply(t, m.n, s_q);
  Var l1 = mlp_apply(t, m.l1, s_q);
  Var l2 = mlp_apply(t, m.l2, s_q);
  Var l3 = mlp_apply(t, m.l3, s_q);
  Var i1 = t.layer_norm(t.unbind3(F, n, l1), m.ln1g, m.ln1b, LayerNormParams::kEpsilon);
  Var i2 = t.layer_norm(t.unbind3(F, i1, l2), m.ln2g, m.ln2b, LayerNormParams::kEpsilon);
  Var i3 = t.layer_norm(t.unbind3(F, i2, l3), m.ln3g, m.ln3b, LayerNormParams::kEpsilon);
  return t.matvec(m.proj, t.add(t.add(i1, i2), i3));
}

Var sample_loss_tape(Tape& t, const ModelVars& m, const ModelDims& dims,
                     const Story& story, const std::vector<int>& question,
                     int answer_id, const AblationConfig& ab) {
  Var F = t.constant(Tensor({dims.entity, dims.relation, dims.entity}));
  for (const auto& sentence : story) {
    Var s = encode_sentence(t, m.emb, m.pos, sentence);
    F = step_tape(t, F, s, m, ab);
  }
  Var s_q = encode_sentence(t, m.emb, m.pos, question);
  Var logits = infer_tape(t, F, s_q, m);
  return t.softmax_xent(logits, answer_id);
}

}  // namespace tprnn
