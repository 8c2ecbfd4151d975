#include "tprnn/trainer.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tprnn {

void apply_mode_preset(TrainConfig& cfg) {
  const bool single = cfg.mode == RunMode::SingleTask;
  if (cfg.batch_size == 0) cfg.batch_size = single ? 128 : 32;
  if (cfg.dim_entity == 0) cfg.dim_entity = single ? 15 : 40;
  if (cfg.dim_relation == 0) cfg.dim_relation = single ? 10 : 20;
  // dim_hidden 0 resolves against the vocabulary for single-task runs.
  if (cfg.dim_hidden == 0 && !single) cfg.dim_hidden = 90;
}

ModelDims resolve_dims(const TrainConfig& cfg, int vocab_size) {
  ModelDims d;
  d.vocab = vocab_size;
  d.hidden = cfg.dim_hidden > 0 ? cfg.dim_hidden : vocab_size;
  d.entity = cfg.dim_entity > 0 ? cfg.dim_entity
                                : (cfg.mode == RunMode::SingleTask ? 15 : 40);
  d.relation = cfg.dim_relation > 0 ? cfg.dim_relation
                                    : (cfg.mode == RunMode::SingleTask ? 10 : 20);
  return d;
}

std::string config_to_json(const TrainConfig& cfg, const ModelDims& dims,
                           int max_words) {
  nlohmann::json j;
  j["mode"] = cfg.mode == RunMode::SingleTask
                  ? "single"
                  : (cfg.mode == RunMode::AllTasks ? "all" : "systematic");
  j["task_id"] = cfg.task_id;
  j["dim_symbol"] = dims.vocab;
  j["dim_hidden"] = dims.hidden;
  j["dim_entity"] = dims.entity;
  j["dim_relation"] = dims.relation;
  j["max_words"] = max_words;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.opt.lr;
  j["beta1"] = cfg.opt.beta1;
  j["beta2"] = cfg.opt.beta2;
  j["eps"] = cfg.opt.eps;
  j["max_steps"] = cfg.max_steps;
  j["eval_every"] = cfg.eval_every;
  j["patience"] = cfg.patience;
  j["warmup_steps"] = cfg.warmup_steps;
  j["seed"] = cfg.seed;
  j["augment_seed"] = cfg.augment_seed;
  std::string ab;
  if (cfg.ablation.use_write) ab += 'w';
  if (cfg.ablation.use_move) ab += 'm';
  if (cfg.ablation.use_backlink) ab += 'b';
  j["ablation"] = ab;
  return j.dump();
}

namespace {

std::string task_path(const std::string& dir, int task, const char* split) {
  return dir + "/qa" + std::to_string(task) + "_" + split + ".txt";
}

}  // namespace

TextDatasets load_text_datasets(const TrainConfig& cfg) {
  TextDatasets ds;
  auto append = [](std::vector<TextSample>& dst, std::vector<TextSample> src) {
    dst.insert(dst.end(), std::make_move_iterator(src.begin()),
               std::make_move_iterator(src.end()));
  };
  if (cfg.mode == RunMode::SingleTask) {
    ds.train = parse_task_file(task_path(cfg.data_dir, cfg.task_id, "train"),
                               cfg.task_id);
    ds.valid = parse_task_file(task_path(cfg.data_dir, cfg.task_id, "valid"),
                               cfg.task_id);
    ds.test = parse_task_file(task_path(cfg.data_dir, cfg.task_id, "test"),
                              cfg.task_id);
  } else if (cfg.mode == RunMode::AllTasks) {
    for (int task = 1; task <= 20; ++task) {
      append(ds.train, parse_task_file(task_path(cfg.data_dir, task, "train"), task));
      append(ds.valid, parse_task_file(task_path(cfg.data_dir, task, "valid"), task));
      append(ds.test, parse_task_file(task_path(cfg.data_dir, task, "test"), task));
    }
  } else {
    AugmentSpec spec;
    spec.seed = cfg.augment_seed;
    std::map<int, TaskSplits> base;
    for (int task : spec.task_pool) {
      base[task].train = parse_task_file(task_path(cfg.data_dir, task, "train"), task);
      base[task].test = parse_task_file(task_path(cfg.data_dir, task, "test"), task);
      append(ds.train, base[task].train);
      append(ds.valid, parse_task_file(task_path(cfg.data_dir, task, "valid"), task));
    }
    AugmentResult aug = augment_systematic(base, spec);
    ds.augment_train_tasks = aug.train_tasks;
    append(ds.train, std::move(aug.extra_train));
    ds.test = std::move(aug.extra_test);
  }
  return ds;
}

Datasets load_datasets(const TrainConfig& cfg) {
  TextDatasets text = load_text_datasets(cfg);
  Datasets ds;
  const VocabInfo vi = build_vocab({&text.train, &text.valid, &text.test});
  ds.vocab = vi.vocab;
  ds.max_words = vi.max_words;
  ds.augment_train_tasks = std::move(text.augment_train_tasks);
  ds.train = encode_samples(text.train, ds.vocab, ds.max_words);
  ds.valid = encode_samples(text.valid, ds.vocab, ds.max_words);
  ds.test = encode_samples(text.test, ds.vocab, ds.max_words);
  return ds;
}

int count_failed_tasks(const std::map<int, double>& per_task_error,
                       double threshold) {
  int failed = 0;
  for (const auto& [task, err] : per_task_error) {
    if (err > threshold) ++failed;
  }
  return failed;
}

double error_percent(const std::vector<int>& predictions,
                     const std::vector<int>& golds) {
  if (predictions.size() != golds.size() || predictions.empty()) {
    throw std::invalid_argument("error_percent: length mismatch or empty");
  }
  long wrong = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] != golds[i]) ++wrong;
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(predictions.size());
}

EvalResult evaluate(const ModelParams& params,
                    const std::vector<Sample>& samples,
                    const AblationConfig& ablation) {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  EvalResult out;
  double loss_sum = 0.0;
  std::vector<int> preds, golds;
  preds.reserve(samples.size());
  golds.reserve(samples.size());
  std::map<int, std::pair<long, long>> task_counts;               // wrong/total
  std::map<std::string, std::map<int, std::pair<long, long>>> cell_counts;
  for (const Sample& s : samples) {
    const Tensor logits = forward_logits(s.story, s.question, params, ablation);
    loss_sum += loss(logits, s.answer);
    const int pred = argmax(logits);
    preds.push_back(pred);
    golds.push_back(s.answer);
    auto& tc = task_counts[s.task_id];
    tc.second += 1;
    const bool wrong = pred != s.answer;
    if (wrong) tc.first += 1;
    if (!s.entity.empty()) {
      auto& cc = cell_counts[s.entity][s.task_id];
      cc.second += 1;
      if (!wrong) cc.first += 1;  // accuracy for the grid
    }
  }
  out.mean_loss = loss_sum / static_cast<double>(samples.size());
  out.error_pct = error_percent(preds, golds);
  for (const auto& [task, wc] : task_counts) {
    out.per_task_error[task] =
        100.0 * static_cast<double>(wc.first) / static_cast<double>(wc.second);
  }
  for (const auto& [entity, tasks] : cell_counts) {
    for (const auto& [task, rc] : tasks) {
      out.per_cell_accuracy[entity][task] =
          100.0 * static_cast<double>(rc.first) / static_cast<double>(rc.second);
    }
  }
  return out;
}

namespace {

// Padded steps are skipped outright, which contributes exactly zero state
// change, the same as scaling the delta by the zero mask.
Var batch_sample_loss(Tape& t, const ModelVars& mv, const ModelDims& dims,
                      const Sample& sample, const std::vector<double>& mask,
                      const AblationConfig& ab) {
  Story effective;
  effective.reserve(sample.story.size());
  for (size_t i = 0; i < sample.story.size(); ++i) {
    if (i < mask.size() && mask[i] == 0.0) continue;
    effective.push_back(sample.story[i]);
  }
  return sample_loss_tape(t, mv, dims, effective, sample.question, sample.answer, ab);
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Datasets& ds) {
  if (ds.train.empty() || ds.valid.empty() || ds.test.empty()) {
    throw std::invalid_argument("train: dataset splits must be nonempty");
  }
  TrainConfig conf = cfg;
  apply_mode_preset(conf);
  const ModelDims dims = resolve_dims(conf, ds.vocab.size());

  uint64_t model_seed = conf.seed;
  ModelParams params = init_model(dims, ds.max_words, model_seed);
  std::vector<Param*> ptrs = params.all();
  NadamState opt_state;
  opt_state.init(ptrs);
  Schedule sched{conf.opt.lr, conf.warmup_steps, 0.1, 0.1, false};
  BatchStream stream(ds.train, conf.batch_size, conf.seed * 0x9e3779b97f4a7c15ULL + 1);

  TrainResult result;
  RunMetrics& metrics = result.metrics;
  ModelParams best = params;
  long step = 0;
  int evals_no_improve = 0;
  double running_loss = 0.0;
  long running_n = 0;

  while (step < conf.max_steps) {
    const long cur = step + 1;
    Batch batch = stream.next();
    try {
      const double lr = effective_lr(sched, cur, metrics.best_val_loss);
      zero_grads(ptrs);
      double batch_loss = 0.0;
      for (size_t i = 0; i < batch.samples.size(); ++i) {
        Tape tape;
        const ModelVars mv = bind_model(tape, params);
        const Var sample_loss =
            batch_sample_loss(tape, mv, dims, batch.samples[i], batch.mask[i],
                              conf.ablation);
        batch_loss += tape.scalar(sample_loss);
        tape.backward(sample_loss);
      }
      const double inv = 1.0 / static_cast<double>(batch.samples.size());
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) throw NonFiniteError("non-finite batch loss");
      for (Param* p : ptrs) {
        for (int i = 0; i < p->grad.size(); ++i) p->grad[i] *= inv;
      }
      mask_pad_gradient(params.encoder);
      nadam_step(ptrs, opt_state, conf.opt, lr);
      step = cur;
      metrics.step_losses.push_back(batch_loss);
      running_loss += batch_loss;
      running_n += 1;

      if (step % conf.eval_every == 0) {
        const EvalResult val = evaluate(params, ds.valid, conf.ablation);
        if (val.mean_loss < metrics.best_val_loss) {
          metrics.best_val_loss = val.mean_loss;
        }
        RunMetrics::EvalRecord rec;
        rec.step = step;
        rec.train_loss = running_n > 0 ? running_loss / running_n : 0.0;
        rec.val_loss = val.mean_loss;
        rec.val_error_pct = val.error_pct;
        rec.lr = lr;
        rec.reinits = metrics.reinit_count;
        rec.per_task_error = val.per_task_error;
        metrics.evals.push_back(std::move(rec));
        running_loss = 0.0;
        running_n = 0;
        if (val.error_pct < metrics.best_val_error_pct) {
          metrics.best_val_error_pct = val.error_pct;
          metrics.best_step = step;
          best = params;
          evals_no_improve = 0;
        } else {
          evals_no_improve += 1;
          if (evals_no_improve >= conf.patience) break;
        }
      }
    } catch (const NonFiniteError& e) {
      if (nan_policy(cur, conf.warmup_steps) == NanAction::Abort ||
          metrics.reinit_count >= conf.max_reinits) {
        std::ostringstream os;
        os << "training diverged at step " << cur << " (" << e.what()
           << "); reinits so far: " << metrics.reinit_count;
        throw TrainingDiverged(os.str());
      }
      metrics.reinit_count += 1;
      model_seed += 1;
      params = init_model(dims, ds.max_words, model_seed);
      opt_state.init(ptrs);
      sched.halved = false;
      step = 0;
      evals_no_improve = 0;
      running_loss = 0.0;
      running_n = 0;
      metrics.step_losses.clear();
      metrics.evals.clear();
      metrics.best_val_loss = std::numeric_limits<double>::infinity();
      metrics.best_val_error_pct = std::numeric_limits<double>::infinity();
      metrics.best_step = 0;
      best = params;
    }
  }

  result.test_eval = evaluate(best, ds.test, conf.ablation);
  metrics.test_error_pct = result.test_eval.error_pct;
  if (result.test_eval.per_task_error.size() > 1) {
    metrics.failed_tasks = count_failed_tasks(result.test_eval.per_task_error);
  }
  result.params = std::move(best);
  return result;
}

void write_metrics_csv(const std::string& path, const RunMetrics& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics file: " + path);
  std::set<int> tasks;
  for (const auto& rec : m.evals) {
    for (const auto& [task, err] : rec.per_task_error) tasks.insert(task);
  }
  out << "step,train_loss,val_loss,val_error_pct,lr,reinits";
  if (tasks.size() > 1) {
    for (int task : tasks) out << ",task" << task << "_error_pct";
  }
  out << '\n';
  out.precision(17);
  for (const auto& rec : m.evals) {
    out << rec.step << ',' << rec.train_loss << ',' << rec.val_loss << ','
        << rec.val_error_pct << ',' << rec.lr << ',' << rec.reinits;
    if (tasks.size() > 1) {
      for (int task : tasks) {
        auto it = rec.per_task_error.find(task);
        out << ',';
        if (it != rec.per_task_error.end()) out << it->second;
      }
    }
    out << '\n';
  }
  out << "# test_error_pct=" << m.test_error_pct << " best_step=" << m.best_step
      << " reinits=" << m.reinit_count;
  if (m.failed_tasks >= 0) out << " failed_tasks=" << m.failed_tasks;
  out << '\n';
}

void write_cell_grid_csv(const std::string& path, const EvalResult& eval) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write grid file: " + path);
  std::set<int> tasks;
  for (const auto& [entity, cells] : eval.per_cell_accuracy) {
    for (const auto& [task, acc] : cells) tasks.insert(task);
  }
  out << "entity";
  for (int task : tasks) out << ",task" << task << "_accuracy_pct";
  out << '\n';
  out.precision(17);
  for (const auto& [entity, cells] : eval.per_cell_accuracy) {
    out << entity;
    for (int task : tasks) {
      auto it = cells.find(task);
      out << ',';
      if (it != cells.end()) out << it->second;
    }
    out << '\n';
  }
}

}  // namespace tprnn
