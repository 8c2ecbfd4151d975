#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "tprnn/data_babi.hpp"
#include "tprnn/model.hpp"
#include "tprnn/optimizer.hpp"

namespace tprnn {

/// Non-finite values after the warm-up phase are fatal.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RunMode { SingleTask, AllTasks, Systematic };

struct TrainConfig {
  RunMode mode = RunMode::SingleTask;
  int task_id = 1;
  std::string data_dir;
  std::string out_dir;

  // 0 means "use the mode preset".
  int dim_hidden = 0;
  int dim_entity = 0;
  int dim_relation = 0;
  int batch_size = 0;

  NadamConfig opt = single_task_preset();
  long max_steps = 200000;
  int eval_every = 1000;
  int patience = 20;
  int warmup_steps = 50;
  int max_reinits = 50;
  uint64_t seed = 1;
  uint64_t augment_seed = 1;
  AblationConfig ablation;
};

/// Fills optimizer/batch/dim defaults from the mode. Explicitly set
/// fields (non-zero dims, non-zero batch) are left alone.
void apply_mode_preset(TrainConfig& cfg);

ModelDims resolve_dims(const TrainConfig& cfg, int vocab_size);

std::string config_to_json(const TrainConfig& cfg, const ModelDims& dims,
                           int max_words);

struct TextDatasets {
  std::vector<TextSample> train, valid, test;
  std::map<std::string, std::vector<int>> augment_train_tasks;  // systematic
};

/// Reads qa{N}_{train,valid,test}.txt from data_dir per the run mode; in
/// systematic mode the augmented pairs are generated here as well.
TextDatasets load_text_datasets(const TrainConfig& cfg);

struct Datasets {
  std::vector<Sample> train, valid, test;
  Vocabulary vocab;
  int max_words = 0;
  std::map<std::string, std::vector<int>> augment_train_tasks;  // systematic
};

/// load_text_datasets plus vocabulary construction over all three splits.
Datasets load_datasets(const TrainConfig& cfg);

struct EvalResult {
  double mean_loss = 0.0;
  double error_pct = 100.0;
  std::map<int, double> per_task_error;
  // entity -> task -> accuracy %, for the systematic test grid
  std::map<std::string, std::map<int, double>> per_cell_accuracy;
};

double error_percent(const std::vector<int>& predictions,
                     const std::vector<int>& golds);

/// Count of tasks with error above the failure threshold (default 5%).
int count_failed_tasks(const std::map<int, double>& per_task_error,
                       double threshold = 5.0);

EvalResult evaluate(const ModelParams& params,
                    const std::vector<Sample>& samples,
                    const AblationConfig& ablation);

struct RunMetrics {
  struct EvalRecord {
    long step = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_error_pct = 0.0;
    double lr = 0.0;
    long reinits = 0;
    std::map<int, double> per_task_error;
  };
  std::vector<EvalRecord> evals;
  std::vector<double> step_losses;  // per-step mean batch loss (current attempt)
  long best_step = 0;
  double best_val_error_pct = std::numeric_limits<double>::infinity();
  double best_val_loss = std::numeric_limits<double>::infinity();
  double test_error_pct = -1.0;
  long reinit_count = 0;
  int failed_tasks = -1;  // tasks with test error > 5%, when per task applies
};

struct TrainResult {
  RunMetrics metrics;
  ModelParams params;  // best-validation parameters
  EvalResult test_eval;
};

/// Warm-up, main loop with periodic validation, best-checkpoint keeping,
/// early stopping on validation error, and the reinitialize-on-NaN policy.
TrainResult train(const TrainConfig& cfg, const Datasets& ds);

void write_metrics_csv(const std::string& path, const RunMetrics& m);
void write_cell_grid_csv(const std::string& path, const EvalResult& eval);

}  // namespace tprnn
