// Copyright 2026 The depth-lab Authors.
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

#ifndef DEPTH_TRAINER_H_
#define DEPTH_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depth/checkpoint.h"
#include "depth/corruptor.h"
#include "depth/masks.h"
#include "depth/model.h"
#include "depth/objective.h"
#include "depth/shard.h"

namespace depth {

struct LossOptions {
  LossScheme scheme = LossScheme::kTokenAvg;
  ObjectiveOptions objective;
  MaskOptions masks;
};

struct TrainConfig {
  Objective objective = Objective::kDepth;
  std::uint32_t batch_size = 16;
  std::int64_t total_steps = 10000;
  std::int64_t warmup_steps = 500;
  double peak_lr = 1e-4;
  ScheduleKind schedule = ScheduleKind::kLinear;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  std::int64_t eval_every = 250;
  std::vector<std::int64_t> checkpoint_steps = {250, 500, 1000, 2000, 4000, 8000, 10000};
  std::uint64_t seed = 1;
  LossOptions loss;
  // Pad every example to the batch maximum before the forward pass. Results
  // match the unpadded path; it only costs time.
  bool pad_to_batch_max = false;
  // 0 evaluates the whole validation shard.
  std::size_t max_eval_examples = 0;

  void validate() const;
  Schedule schedule_config() const;
};

struct MetricsRecord {
  std::int64_t step = 0;
  double lr = 0.0;
  LossBreakdown loss;
  std::optional<double> sent_acc_shuffled;
  std::optional<double> sent_acc_unshuffled;
  double realized_mask_rate = 0.0;
  double grad_norm = 0.0;  // pre-clip, training records only
  double wall_seconds = 0.0;
};

std::string metrics_csv_header();
// Deterministic columns only; wall-clock time goes elsewhere.
std::string metrics_csv_row(const MetricsRecord& r);

struct BatchStats {
  LossBreakdown loss;
  SentenceAccuracy accuracy;
  std::uint64_t body_tokens = 0;
  std::uint64_t masked_tokens = 0;
};

// Teacher-forced pass over `batch`. When `grads` is non-null the gradient of
// the batch loss is accumulated into it. A batch with no target tokens
// yields zero loss and leaves `grads` untouched.
template <typename T>
BatchStats run_batch(const Transformer<T>& model, std::span<const CorruptedExample* const> batch,
                     const VocabLayout& layout, const LossOptions& opts,
                     ParameterSet<T>* grads = nullptr, Rng* dropout_rng = nullptr,
                     bool pad_to_batch_max = false);

struct PaddedExample {
  std::vector<TokenId> encoder_ids;
  std::vector<TokenId> decoder_input_ids;
  std::vector<TokenId> target_ids;  // kIgnoreTarget on padding
};

PaddedExample pad_example(const CorruptedExample& ex, std::size_t enc_len, std::size_t dec_len,
                          const VocabLayout& layout);

// Scales `grads` so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
template <typename T>
double clip_global_norm(ParameterSet<T>& grads, double max_norm);

// Throws DataError when an example is not one well-formed document.
void check_unpacked(const CorruptedExample& ex, const VocabLayout& layout);

MetricsRecord evaluate(const Transformer<float>& model, const Shard& val,
                       const TrainConfig& cfg, std::int64_t step = 0, double lr = 0.0);

class Trainer {
 public:
  Trainer(TrainConfig cfg, Transformer<float> model, const Shard& train,
          const Shard* val = nullptr);

  // Adopts parameters, optimizer moments and step from a checkpoint.
  void restore(const Checkpoint& ckpt);
  Checkpoint checkpoint() const;

  std::int64_t step() const { return step_; }
  const TrainConfig& config() const { return cfg_; }
  const Transformer<float>& model() const { return model_; }
  Transformer<float>& model() { return model_; }

  // Records of step s use the batch fixed by (seed, s).
  std::vector<const CorruptedExample*> batch_for_step(std::int64_t step) const;

  // One optimizer step. On a non-finite loss or gradient throws NumericError
  // without touching the parameters.
  MetricsRecord train_step();
  MetricsRecord evaluate() const;

  struct RunOptions {
    std::filesystem::path run_dir;
    std::ostream* progress = nullptr;
    std::int64_t progress_every = 100;
    // Extra key=value lines for config.txt.
    std::map<std::string, std::string> extra_config;
  };
  // Trains to cfg.total_steps writing config.txt, metrics.csv (one row per
  // evaluation), train_log.csv (one row per step), timing.csv and
  // ckpt_<step>.bin. A resumed trainer appends. On a numeric failure the
  // current (still finite) parameters are saved as ckpt_last_good.bin and
  // NumericError propagates.
  void run(const RunOptions& opts);

 private:
  void apply_adamw(double lr);

  TrainConfig cfg_;
  Transformer<float> model_;
  const Shard& train_;
  const Shard* val_;
  VocabLayout layout_;
  std::vector<std::pair<std::size_t, std::size_t>> batches_;  // [begin, end)
  ParameterSet<float> grads_;
  ParameterSet<float> adam_m_;
  ParameterSet<float> adam_v_;
  std::uint64_t adam_t_ = 0;
  std::int64_t step_ = 0;
};

// Full resolved configuration as key=value lines.
std::string describe_config(const TrainConfig& cfg, const ModelConfig& model);

struct GradCheckOptions {
  double epsilon = 1e-5;
  std::size_t samples = 50;
  std::uint64_t seed = 0;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  LossOptions loss;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst_param;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares the analytic gradient of the batch loss with central differences
// at randomly chosen parameter entries (tensor uniform, then entry uniform).
GradCheckResult grad_check(const Transformer<double>& model,
                           std::span<const CorruptedExample* const> batch,
                           const VocabLayout& layout, const GradCheckOptions& opts);

}  // namespace depth

#endif  // DEPTH_TRAINER_H_
