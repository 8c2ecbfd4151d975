#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tprnn/analysis.hpp"
#include "tprnn/checkpoint.hpp"
#include "tprnn/gradcheck_suite.hpp"
#include "tprnn/trainer.hpp"

namespace {

using namespace tprnn;

// Exit codes: 1 usage/config, 2 data, 3 numeric divergence, 4 checkpoint/io.
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitCheckpoint = 4;

AblationConfig parse_ablation(const std::string& s) {
  AblationConfig ab{false, false, false};
  for (char c : s) {
    if (c == 'w') ab.use_write = true;
    else if (c == 'm') ab.use_move = true;
    else if (c == 'b') ab.use_backlink = true;
    else throw CLI::ValidationError("--ablation", "expected a subset of w,m,b");
  }
  if (!ab.use_write && !ab.use_move && !ab.use_backlink) {
    throw CLI::ValidationError("--ablation", "at least one operation required");
  }
  return ab;
}

struct CommonOpts {
  std::string data_dir;
  int task = 0;
  bool all_tasks = false;
  bool systematic = false;
};

void add_mode_flags(CLI::App* cmd, CommonOpts& o) {
  auto* task = cmd->add_option("--task", o.task, "Single-task mode, task id 1..20");
  auto* all = cmd->add_flag("--all-tasks", o.all_tasks, "Joint training on tasks 1..20");
  auto* sys = cmd->add_flag("--systematic", o.systematic,
                            "Joint pool with systematic entity augmentation");
  task->excludes(all)->excludes(sys);
  all->excludes(sys);
  cmd->add_option("--data", o.data_dir, "Dataset directory (qaN_split.txt files)")
      ->envname("TPRNN_DATA")
      ->required();
}

RunMode resolve_mode(const CommonOpts& o) {
  if (o.all_tasks) return RunMode::AllTasks;
  if (o.systematic) return RunMode::Systematic;
  if (o.task >= 1) return RunMode::SingleTask;
  throw CLI::ValidationError("mode", "pick one of --task N, --all-tasks, --systematic");
}

int cmd_train(const CommonOpts& common, TrainConfig cfg, bool lr_set,
              bool beta1_set, bool beta2_set, const std::string& ablation_str) {
  cfg.mode = resolve_mode(common);
  cfg.task_id = common.task;
  cfg.data_dir = common.data_dir;
  cfg.ablation = parse_ablation(ablation_str);
  if (cfg.mode != RunMode::SingleTask) {
    // All-tasks default hyper-parameters unless explicitly overridden.
    NadamConfig preset = all_tasks_preset();
    if (!lr_set) cfg.opt.lr = preset.lr;
    if (!beta1_set) cfg.opt.beta1 = preset.beta1;
    if (!beta2_set) cfg.opt.beta2 = preset.beta2;
  }
  apply_mode_preset(cfg);

  std::filesystem::create_directories(cfg.out_dir);
  const Datasets ds = load_datasets(cfg);
  std::printf("loaded %zu train / %zu valid / %zu test samples, vocab %d, k %d\n",
              ds.train.size(), ds.valid.size(), ds.test.size(), ds.vocab.size(),
              ds.max_words);

  TrainResult res = train(cfg, ds);
  const ModelDims dims = resolve_dims(cfg, ds.vocab.size());
  const std::string ckpt = cfg.out_dir + "/best.ckpt";
  Vocabulary vocab = ds.vocab;
  checkpoint_save(ckpt, res.params, vocab, config_to_json(cfg, dims, ds.max_words));
  write_metrics_csv(cfg.out_dir + "/metrics.csv", res.metrics);
  if (cfg.mode == RunMode::Systematic) {
    write_cell_grid_csv(cfg.out_dir + "/systematic_grid.csv", res.test_eval);
    nlohmann::json manifest;
    for (const auto& [entity, tasks] : ds.augment_train_tasks) {
      manifest["train_tasks"][entity] = tasks;
    }
    manifest["augment_seed"] = cfg.augment_seed;
    std::ofstream mf(cfg.out_dir + "/augment_manifest.json");
    mf << manifest.dump(2) << '\n';
  }
  std::printf("test_error_pct=%.4f best_step=%ld reinits=%ld\n",
              res.metrics.test_error_pct, res.metrics.best_step,
              res.metrics.reinit_count);
  if (res.metrics.failed_tasks >= 0) {
    std::printf("failed_tasks_gt5pct=%d\n", res.metrics.failed_tasks);
  }
  std::printf("checkpoint: %s\n", ckpt.c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const CommonOpts& common,
             const std::string& split) {
  const Checkpoint ck = checkpoint_load(ckpt_path);
  const nlohmann::json cfg_json = nlohmann::json::parse(ck.config_json);

  TrainConfig cfg;
  const std::string mode = cfg_json.at("mode").get<std::string>();
  cfg.mode = mode == "single" ? RunMode::SingleTask
                              : (mode == "all" ? RunMode::AllTasks
                                               : RunMode::Systematic);
  cfg.task_id = cfg_json.at("task_id").get<int>();
  cfg.augment_seed = cfg_json.at("augment_seed").get<uint64_t>();
  cfg.data_dir = common.data_dir;
  std::string ab = cfg_json.at("ablation").get<std::string>();

  const TextDatasets text = load_text_datasets(cfg);
  const std::vector<TextSample>* chosen = &text.test;
  if (split == "train") chosen = &text.train;
  else if (split == "valid") chosen = &text.valid;
  else if (split != "test") throw CLI::ValidationError("--split", "train|valid|test");

  const auto samples = encode_samples(*chosen, ck.vocab, ck.max_words);
  const EvalResult res = evaluate(ck.params, samples, parse_ablation(ab));
  std::printf("split=%s samples=%zu loss=%.6f error_pct=%.4f\n", split.c_str(),
              samples.size(), res.mean_loss, res.error_pct);
  for (const auto& [task, err] : res.per_task_error) {
    if (res.per_task_error.size() > 1) {
      std::printf("task%d_error_pct=%.4f\n", task, err);
    }
  }
  for (const auto& [entity, cells] : res.per_cell_accuracy) {
    for (const auto& [task, acc] : cells) {
      std::printf("cell entity=%s task=%d accuracy_pct=%.4f\n", entity.c_str(),
                  task, acc);
    }
  }
  return 0;
}

int cmd_gradcheck(double eps) {
  const auto cases = run_gradient_checks(eps);
  bool all_pass = true;
  for (const auto& c : cases) {
    std::printf("%-18s max_rel_err=%.3e tol=%.0e %s\n", c.name.c_str(),
                c.max_rel_err, c.tolerance, c.pass ? "ok" : "FAIL");
    all_pass = all_pass && c.pass;
  }
  return all_pass ? 0 : kExitDiverged;
}

int cmd_augment(const std::string& data_dir, const std::string& out_dir,
                uint64_t seed) {
  AugmentSpec spec;
  spec.seed = seed;
  std::map<int, TaskSplits> base;
  for (int task : spec.task_pool) {
    base[task].train = parse_task_file(
        data_dir + "/qa" + std::to_string(task) + "_train.txt", task);
    base[task].test = parse_task_file(
        data_dir + "/qa" + std::to_string(task) + "_test.txt", task);
  }
  const AugmentResult res = augment_systematic(base, spec);
  std::filesystem::create_directories(out_dir);
  write_babi_file(out_dir + "/augment_train.txt", res.extra_train);
  write_babi_file(out_dir + "/augment_test.txt", res.extra_test);
  nlohmann::json manifest;
  for (const auto& [entity, tasks] : res.train_tasks) {
    manifest["train_tasks"][entity] = tasks;
  }
  manifest["augment_seed"] = seed;
  manifest["extra_train"] = res.extra_train.size();
  manifest["extra_test"] = res.extra_test.size();
  std::ofstream mf(out_dir + "/augment_manifest.json");
  mf << manifest.dump(2) << '\n';
  std::printf("extra_train=%zu extra_test=%zu -> %s\n", res.extra_train.size(),
              res.extra_test.size(), out_dir.c_str());
  return 0;
}

int cmd_analyze(const std::string& ckpt_path, const std::string& data_dir,
                int task, const std::string& rep, const std::string& out_dir) {
  const Checkpoint ck = checkpoint_load(ckpt_path);
  const auto samples = parse_task_file(
      data_dir + "/qa" + std::to_string(task) + "_valid.txt", task);
  const RepMatrix reps = collect_reps(ck.params, samples, ck.vocab, rep);
  const Tensor S = cosine_matrix(reps.reps);
  const Dendrogram d = hcluster(S);
  std::filesystem::create_directories(out_dir);
  export_analysis(out_dir, S, d, reps.sentences);
  std::printf("%zu unique sentences, %zu merges -> %s\n", reps.sentences.size(),
              d.merges.size(), out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TPR-RNN: third-order tensor-product memory RNN toolkit"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  CommonOpts train_common;
  add_mode_flags(train_cmd, train_common);
  TrainConfig cfg;
  std::string ablation_str = "wmb";
  train_cmd->add_option("--out", cfg.out_dir, "Output directory")->required();
  train_cmd->add_option("--seed", cfg.seed, "Run seed");
  train_cmd->add_option("--batch", cfg.batch_size, "Batch size (0 = preset)");
  auto* lr_opt = train_cmd->add_option("--lr", cfg.opt.lr, "Base learning rate");
  auto* b1_opt = train_cmd->add_option("--beta1", cfg.opt.beta1, "Nadam beta1");
  auto* b2_opt = train_cmd->add_option("--beta2", cfg.opt.beta2, "Nadam beta2");
  train_cmd->add_option("--ablation", ablation_str, "Memory ops subset: w|wm|wb|wmb");
  train_cmd->add_option("--max-steps", cfg.max_steps, "Step budget");
  train_cmd->add_option("--eval-every", cfg.eval_every, "Validation cadence (steps)");
  train_cmd->add_option("--patience", cfg.patience, "Evals without improvement");
  train_cmd->add_option("--hidden-dim", cfg.dim_hidden, "Hidden dim (0 = preset)");
  train_cmd->add_option("--entity-dim", cfg.dim_entity, "Entity dim (0 = preset)");
  train_cmd->add_option("--relation-dim", cfg.dim_relation, "Relation dim (0 = preset)");
  train_cmd->add_option("--augment-seed", cfg.augment_seed, "Systematic augment seed");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  CommonOpts eval_common;
  std::string eval_ckpt, eval_split = "test";
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint path")->required();
  eval_cmd->add_option("--data", eval_common.data_dir, "Dataset directory")
      ->envname("TPRNN_DATA")
      ->required();
  eval_cmd->add_option("--split", eval_split, "train|valid|test");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  double eps = 1e-5;
  grad_cmd->add_option("--eps", eps, "Central-difference step");

  // augment
  auto* aug_cmd = app.add_subcommand("augment", "Write systematic-generalization splits");
  std::string aug_data, aug_out;
  uint64_t aug_seed = 1;
  aug_cmd->add_option("--data", aug_data, "Dataset directory")
      ->envname("TPRNN_DATA")
      ->required();
  aug_cmd->add_option("--out", aug_out, "Output directory")->required();
  aug_cmd->add_option("--seed", aug_seed, "Augmentation seed");

  // analyze
  auto* ana_cmd = app.add_subcommand("analyze", "Representation similarity analysis");
  std::string ana_ckpt, ana_data, ana_rep = "e1", ana_out;
  int ana_task = 1;
  ana_cmd->add_option("--checkpoint", ana_ckpt, "Checkpoint path")->required();
  ana_cmd->add_option("--data", ana_data, "Dataset directory")
      ->envname("TPRNN_DATA")
      ->required();
  ana_cmd->add_option("--task", ana_task, "Task id for the validation split");
  ana_cmd->add_option("--rep", ana_rep, "e1|e2|r1|r2|r3|q_r1");
  ana_cmd->add_option("--out", ana_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      return cmd_train(train_common, cfg, lr_opt->count() > 0,
                       b1_opt->count() > 0, b2_opt->count() > 0, ablation_str);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_common, eval_split);
    if (grad_cmd->parsed()) return cmd_gradcheck(eps);
    if (aug_cmd->parsed()) return cmd_augment(aug_data, aug_out, aug_seed);
    if (ana_cmd->parsed()) return cmd_analyze(ana_ckpt, ana_data, ana_task, ana_rep, ana_out);
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kExitDiverged;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return kExitCheckpoint;
  } catch (const NonFiniteError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitDiverged;
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
