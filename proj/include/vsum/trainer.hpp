// SGD likelihood training with leave-one-video-out splits, validation-based
// epoch selection, ablation switches, and a finite-difference gradient
// checker.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsum/model.hpp"
#include "vsum/types.hpp"

namespace vsum {

enum class TrainTarget { Oracle, Users };

struct TrainConfig {
  double lr = 0.01;
  int epochs = 50;
  int minibatch = 4;  // query-video pairs per update
  int h = 16;
  int h_o = 16;
  int h_L = 16;
  double lambda = 1e-6;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;  // global gradient norm bound
  bool no_attention = false;
  bool no_emb_d = false;
  TrainTarget target = TrainTarget::Oracle;
};

TrainConfig train_config_from_json(const std::string& text);
TrainConfig load_train_config(const std::string& path);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loglik = 0.0;  // mean over pairs, measured before each update
  double val_precision = 0.0;
  double val_recall = 0.0;
  double val_f1 = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int selected_epoch = 0;  // argmax validation F1, ties to the earliest
};

void write_history_csv(const TrainHistory& h, const std::string& path);

// Disjoint partition by video; queries and summaries follow their video.
// Requires at least 3 videos and test != val.
void split_leave_one_out(const Dataset& d, const std::string& test_video,
                         const std::string& val_video, Dataset& train, Dataset& val,
                         Dataset& test);

// Mean count-mode precision/recall/F1 of summarize() output against the user
// summaries, over every query of the dataset.
struct EvalMean {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

EvalMean evaluate_model(const ModelParams& p, const Dataset& d);

struct TrainResult {
  ModelParams params;  // snapshot from the selected epoch
  TrainHistory history;
};

// Plain SGD ascent on the mean log-likelihood of the target summaries.
// Deterministic given cfg.seed: initialization and epoch shuffling draw from
// fixed derived streams. Oracle targets are built on the fly when the
// dataset carries none.
TrainResult train(const Dataset& d_train, const Dataset& d_val, const TrainConfig& cfg);

struct GradCheckConfig {
  ModelDims dims{5, 6, 3, 4, 4, 4};
  int shots = 6;
  // Two-shot segments keep every principal minor at or below h_L. Larger
  // selections make the minors rank-deficient and their finite differences
  // meaningless at small lambda; the analytic gradient is exact either way.
  int segment_size = 2;
  double lambda = 1e-6;
  double init_scale = 0.3;
  double fd_step = 1e-5;
  double tolerance = 1e-4;
  int instances = 20;
  bool no_attention = false;
  bool no_emb_d = false;
};

GradCheckConfig grad_check_config_from_json(const std::string& text);
GradCheckConfig load_grad_check_config(const std::string& path);

struct GradCheckReport {
  double max_rel_error = 0.0;
  double err_a = 0.0;
  double err_b = 0.0;
  double err_c = 0.0;
  double err_d = 0.0;
  int instances = 0;
  bool passed = false;
};

// Compares grad_log_likelihood against central finite differences on random
// instances, entry by entry. Relative error uses max(|analytic|, |numeric|,
// 1e-6) as the denominator. D is skipped under no_emb_d (it is frozen).
GradCheckReport gradient_check(const GradCheckConfig& cfg, std::uint64_t seed);

}  // namespace vsum
