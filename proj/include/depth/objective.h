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

#ifndef DEPTH_OBJECTIVE_H_
#define DEPTH_OBJECTIVE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "depth/model.h"
#include "depth/vocab.h"

namespace depth {

// Target positions holding this id are ignored (padding).
inline constexpr TokenId kIgnoreTarget = 0xFFFFFFFFu;

enum class LossScheme { kTokenAvg, kSumOfMeans, kSentenceX5 };

LossScheme parse_loss_scheme(const std::string& name);
std::string to_string(LossScheme scheme);

struct ObjectiveOptions {
  // <EOSEN> targets count toward the sentence loss partition.
  bool eosen_in_sentence_loss = true;
  // <EOSEN> targets count toward sentence accuracy.
  bool eosen_in_accuracy = false;
};

struct LossBreakdown {
  double total = 0.0;
  double sentence_loss = 0.0;
  double reconstruction_loss = 0.0;
  std::uint64_t n_total = 0;
  std::uint64_t n_sentence = 0;
  LossScheme scheme = LossScheme::kTokenAvg;
};

struct TargetCounts {
  std::uint64_t n_total = 0;
  std::uint64_t n_sentence = 0;

  void add(std::span<const TokenId> targets, const VocabLayout& layout,
           const ObjectiveOptions& opts = {});
};

// Per-token coefficients c such that total = sum_i c_i * nll_i.
struct LossWeights {
  double sentence = 0.0;
  double regular = 0.0;
};

// Throws NumericError when counts.n_total is 0.
LossWeights loss_weights(LossScheme scheme, const TargetCounts& counts);

// Running sums of per-token negative log-likelihood over a batch or a
// validation set.
class LossAccumulator {
 public:
  explicit LossAccumulator(const VocabLayout& layout, ObjectiveOptions opts = {})
      : layout_(layout), opts_(opts) {}

  // Adds one example. When `dlogits` is non-null it receives
  // w_i * (softmax_i - onehot_i) for every non-ignored row.
  template <typename T>
  void add(const Matrix<T>& logits, std::span<const TokenId> targets,
           const LossWeights* weights = nullptr, Matrix<T>* dlogits = nullptr);

  LossBreakdown result(LossScheme scheme) const;
  const TargetCounts& counts() const { return counts_; }

 private:
  VocabLayout layout_;
  ObjectiveOptions opts_;
  TargetCounts counts_;
  double sum_all_ = 0.0;
  double sum_sentence_ = 0.0;
  double sum_regular_ = 0.0;
};

// Single-example convenience wrapper.
template <typename T>
LossBreakdown loss_breakdown(const Matrix<T>& logits, std::span<const TokenId> targets,
                             const VocabLayout& layout, LossScheme scheme,
                             ObjectiveOptions opts = {});

struct SentenceAccuracy {
  std::uint64_t shuffled_correct = 0;
  std::uint64_t shuffled_total = 0;
  std::uint64_t unshuffled_correct = 0;
  std::uint64_t unshuffled_total = 0;

  // Counts positions whose target is <SENT_i> (and <EOSEN> if configured).
  template <typename T>
  void add(const Matrix<T>& logits, std::span<const TokenId> targets, bool shuffled,
           const VocabLayout& layout, ObjectiveOptions opts = {});

  std::optional<double> shuffled() const;
  std::optional<double> unshuffled() const;
  std::optional<double> overall() const;
};

template <typename T>
std::optional<double> sentence_accuracy(const Matrix<T>& logits,
                                        std::span<const TokenId> targets,
                                        const VocabLayout& layout, ObjectiveOptions opts = {});

enum class ScheduleKind { kLinear, kInvSqrt };

ScheduleKind parse_schedule_kind(const std::string& name);
std::string to_string(ScheduleKind kind);

struct Schedule {
  ScheduleKind kind = ScheduleKind::kLinear;
  double peak_lr = 1e-4;
  std::int64_t warmup_steps = 10000;
  std::int64_t total_steps = 100000;

  void validate() const;
};

// Linear ramp from 0 at step 0 to peak at warmup_steps, then linear decay to
// 0 at total_steps (clamped there) or peak * sqrt(warmup / step).
double lr_at(std::int64_t step, const Schedule& schedule);

}  // namespace depth

#endif  // DEPTH_OBJECTIVE_H_
