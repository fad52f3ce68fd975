// Copyright 2026 The OKGIT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OKGIT_TRAINING_H_
#define OKGIT_TRAINING_H_

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

#include "okgit/evaluation.hpp"

namespace okgit {

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct LossBundle {
  double triple_loss = 0.0;
  double type_loss = 0.0;
  double total = 0.0;
};

// Binary cross-entropy against sigmoid(score), averaged over candidates.
// Smoothing redistributes label mass: y' = (1-eps) y + eps / num_candidates.
// Probabilities are clamped at 1e-12 before the log.
double triple_loss(const Vec &scores, const Vec &labels, double smoothing);
double type_loss(const Vec &type_scores, const Vec &labels, double smoothing);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<ParamRef> &params);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Mat> m_, v_;  // aligned with the registry on first step
};

// ---------------------------------------------------------------------------
// One-vs-all training
// ---------------------------------------------------------------------------

// Whether the type machinery participates at all. The reduced path never
// touches the projectors or context vectors and realizes the plain
// prediction-score model.
enum class ScorePath { kFull, kPredOnly };

// Context vectors recomputed from the live embeddings instead of a cache.
// They enter the score as constants: no gradient flows through them.
enum class LiveContext { kNone, kConcat, kAdd };

struct TrainBatch {
  std::vector<std::pair<NpId, RpId>> queries;
  std::vector<std::vector<NpId>> positives;  // true answers per query
  Mat context;                               // B x d_b; unused on kPredOnly
  LiveContext live = LiveContext::kNone;
};

struct BatchStats {
  LossBundle loss;
  double mean_phat_positive = 0.0;  // sigmoid of the type score on positives
  double mean_yhat_positive = 0.0;
};

// Shared batch state bound once per fit/grad-check: graph wiring plus
// tokenized relation phrases.
struct TrainGraph {
  const OpenKG *kg = nullptr;
  const WordVocab *words = nullptr;
  std::unique_ptr<ClusterAggregator> aggregator;
  std::vector<std::vector<int>> rp_tokens;  // per rp id

  static TrainGraph bind(const OpenKG &kg, const WordVocab &words);
};

// Full forward + backward of the one-vs-all objective for one batch.
// Gradients accumulate into the parameter tensors (zeroed first).
// `update_running` controls batch-norm running statistics; finite-difference
// probes disable it together with dropout.
BatchStats train_forward_backward(ModelParams &params, const TrainGraph &graph,
                                  const TrainBatch &batch, ScorePath path,
                                  Mode mode, bool update_running,
                                  bool accumulate_grads, Rng &dropout_rng);

// Loss-only evaluation of the same objective (used by gradient checks).
double batch_loss_only(ModelParams &params, const TrainGraph &graph,
                       const TrainBatch &batch, ScorePath path, Mode mode,
                       Rng &dropout_rng);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

struct Checkpoint {
  ModelParams params;
  WordVocab words;
  nlohmann::json metrics;

  static Checkpoint load(const std::filesystem::path &dir);
};

void save_checkpoint(const ModelParams &params, const WordVocab &words,
                     const nlohmann::json &metrics,
                     const std::filesystem::path &dir);

// ---------------------------------------------------------------------------
// fit / grid search
// ---------------------------------------------------------------------------

struct FitResult {
  std::filesystem::path checkpoint_dir;
  double best_valid_mrr = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
  Metrics best_valid_metrics;
};

// Trains on the inverse-augmented graph with one-vs-all labeling, evaluates
// validation MRR each epoch, and checkpoints the best parameters. Aborts
// with a batch dump if the loss turns non-finite. `context` may be null when
// gamma == 0 and lambda == 0.
FitResult fit(const OpenKG &kg, ContextSource *context, const ModelConfig &cfg,
              const std::filesystem::path &out_dir, std::ostream *log);

struct GridPoint {
  ModelConfig config;
  std::string cache_path;  // context cache backing this point, may be empty
};

struct GridResult {
  std::filesystem::path best_checkpoint;
  ModelConfig best_config;
  Metrics best_valid_metrics;
  std::size_t points_run = 0;
  std::size_t points_skipped = 0;  // already present in the leaderboard
};

// Trains every point, appending one JSON line per finished point to
// `out_dir`/leaderboard.jsonl; completed points are skipped on rerun. Ties
// are broken by Hits@10, then lexicographic config key.
GridResult grid_search(const OpenKG &kg, const std::vector<GridPoint> &points,
                       const std::filesystem::path &out_dir, std::ostream *log);

}  // namespace okgit

#endif  // OKGIT_TRAINING_H_
