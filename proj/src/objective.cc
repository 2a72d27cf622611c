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

#include "depth/objective.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "depth/errors.h"

namespace depth {
namespace {

bool in_loss_partition(TokenId t, const VocabLayout& layout, const ObjectiveOptions& opts) {
  if (layout.is_sentence(t)) return true;
  return opts.eosen_in_sentence_loss && t == layout.eosen();
}

bool in_accuracy_set(TokenId t, const VocabLayout& layout, const ObjectiveOptions& opts) {
  if (layout.is_sentence(t)) return true;
  return opts.eosen_in_accuracy && t == layout.eosen();
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

template <typename T>
Eigen::Index argmax_row(const Matrix<T>& logits, Eigen::Index r) {
  Eigen::Index best = 0;
  logits.row(r).maxCoeff(&best);
  return best;
}

}  // namespace

LossScheme parse_loss_scheme(const std::string& name) {
  if (name == "token_avg") return LossScheme::kTokenAvg;
  if (name == "sum_of_means") return LossScheme::kSumOfMeans;
  if (name == "sentence_x5") return LossScheme::kSentenceX5;
  throw ConfigError("unknown loss scheme '" + name +
                    "' (expected token_avg, sum_of_means or sentence_x5)");
}

std::string to_string(LossScheme scheme) {
  switch (scheme) {
    case LossScheme::kTokenAvg: return "token_avg";
    case LossScheme::kSumOfMeans: return "sum_of_means";
    case LossScheme::kSentenceX5: return "sentence_x5";
  }
  return "?";
}

void TargetCounts::add(std::span<const TokenId> targets, const VocabLayout& layout,
                       const ObjectiveOptions& opts) {
  for (TokenId t : targets) {
    if (t == kIgnoreTarget) continue;
    ++n_total;
    if (in_loss_partition(t, layout, opts)) ++n_sentence;
  }
}

LossWeights loss_weights(LossScheme scheme, const TargetCounts& counts) {
  if (counts.n_total == 0) throw NumericError("loss over zero target tokens");
  const double n = static_cast<double>(counts.n_total);
  const double ns = static_cast<double>(counts.n_sentence);
  const double nr = n - ns;
  LossWeights w;
  switch (scheme) {
    case LossScheme::kTokenAvg:
      w.sentence = 1.0 / n;
      w.regular = 1.0 / n;
      break;
    case LossScheme::kSumOfMeans:
    case LossScheme::kSentenceX5: {
      const double factor = scheme == LossScheme::kSentenceX5 ? 5.0 : 1.0;
      w.sentence = ns > 0 ? factor / ns : 0.0;
      w.regular = nr > 0 ? 1.0 / nr : 0.0;
      break;
    }
  }
  return w;
}

template <typename T>
void LossAccumulator::add(const Matrix<T>& logits, std::span<const TokenId> targets,
                          const LossWeights* weights, Matrix<T>* dlogits) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw std::invalid_argument("logits rows (" + std::to_string(logits.rows()) +
                                ") do not match target length (" +
                                std::to_string(targets.size()) + ")");
  }
  if (dlogits && (dlogits->rows() != logits.rows() || dlogits->cols() != logits.cols())) {
    dlogits->setZero(logits.rows(), logits.cols());
  }
  const Eigen::Index vocab = logits.cols();
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const TokenId t = targets[static_cast<std::size_t>(r)];
    if (t == kIgnoreTarget) continue;
    if (t >= static_cast<TokenId>(vocab)) {
      throw std::invalid_argument("target id " + std::to_string(t) + " outside logits");
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < vocab; ++c) {
      max_logit = std::max(max_logit, static_cast<double>(logits(r, c)));
    }
    double denom = 0.0;
    for (Eigen::Index c = 0; c < vocab; ++c) {
      denom += std::exp(static_cast<double>(logits(r, c)) - max_logit);
    }
    const double log_z = max_logit + std::log(denom);
    const double nll = log_z - static_cast<double>(logits(r, t));
    const bool sentence = in_loss_partition(t, layout_, opts_);
    ++counts_.n_total;
    sum_all_ += nll;
    if (sentence) {
      ++counts_.n_sentence;
      sum_sentence_ += nll;
    } else {
      sum_regular_ += nll;
    }
    if (dlogits && weights) {
      const double w = sentence ? weights->sentence : weights->regular;
      for (Eigen::Index c = 0; c < vocab; ++c) {
        const double p = std::exp(static_cast<double>(logits(r, c)) - log_z);
        (*dlogits)(r, c) = static_cast<T>(w * p);
      }
      (*dlogits)(r, t) -= static_cast<T>(w);
    }
  }
}

LossBreakdown LossAccumulator::result(LossScheme scheme) const {
  if (counts_.n_total == 0) throw NumericError("loss over zero target tokens");
  LossBreakdown b;
  b.scheme = scheme;
  b.n_total = counts_.n_total;
  b.n_sentence = counts_.n_sentence;
  const double n = static_cast<double>(counts_.n_total);
  const std::uint64_t n_regular = counts_.n_total - counts_.n_sentence;
  if (scheme == LossScheme::kTokenAvg) {
    b.total = sum_all_ / n;
    b.sentence_loss = sum_sentence_ / n;
    b.reconstruction_loss = sum_regular_ / n;
    return b;
  }
  b.sentence_loss =
      counts_.n_sentence > 0 ? sum_sentence_ / static_cast<double>(counts_.n_sentence) : 0.0;
  b.reconstruction_loss = n_regular > 0 ? sum_regular_ / static_cast<double>(n_regular) : 0.0;
  const double factor = scheme == LossScheme::kSentenceX5 ? 5.0 : 1.0;
  b.total = factor * b.sentence_loss + b.reconstruction_loss;
  return b;
}

template <typename T>
LossBreakdown loss_breakdown(const Matrix<T>& logits, std::span<const TokenId> targets,
                             const VocabLayout& layout, LossScheme scheme,
                             ObjectiveOptions opts) {
  LossAccumulator acc(layout, opts);
  acc.add(logits, targets);
  return acc.result(scheme);
}

template <typename T>
void SentenceAccuracy::add(const Matrix<T>& logits, std::span<const TokenId> targets,
                           bool shuffled, const VocabLayout& layout, ObjectiveOptions opts) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw std::invalid_argument("logits rows do not match target length");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const TokenId t = targets[i];
    if (t == kIgnoreTarget || !in_accuracy_set(t, layout, opts)) continue;
    const bool hit =
        argmax_row(logits, static_cast<Eigen::Index>(i)) == static_cast<Eigen::Index>(t);
    if (shuffled) {
      ++shuffled_total;
      if (hit) ++shuffled_correct;
    } else {
      ++unshuffled_total;
      if (hit) ++unshuffled_correct;
    }
  }
}

std::optional<double> SentenceAccuracy::shuffled() const {
  return ratio(shuffled_correct, shuffled_total);
}

std::optional<double> SentenceAccuracy::unshuffled() const {
  return ratio(unshuffled_correct, unshuffled_total);
}

std::optional<double> SentenceAccuracy::overall() const {
  return ratio(shuffled_correct + unshuffled_correct, shuffled_total + unshuffled_total);
}

template <typename T>
std::optional<double> sentence_accuracy(const Matrix<T>& logits,
                                        std::span<const TokenId> targets,
                                        const VocabLayout& layout, ObjectiveOptions opts) {
  SentenceAccuracy acc;
  acc.add(logits, targets, false, layout, opts);
  return acc.overall();
}

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "linear") return ScheduleKind::kLinear;
  if (name == "inv_sqrt") return ScheduleKind::kInvSqrt;
  throw ConfigError("unknown schedule '" + name + "' (expected linear or inv_sqrt)");
}

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kLinear ? "linear" : "inv_sqrt";
}

void Schedule::validate() const {
  if (!(peak_lr > 0.0) || !std::isfinite(peak_lr)) throw ConfigError("peak_lr must be > 0");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (warmup_steps > total_steps) {
    throw ConfigError("warmup_steps (" + std::to_string(warmup_steps) +
                      ") exceeds total_steps (" + std::to_string(total_steps) + ")");
  }
  if (kind == ScheduleKind::kInvSqrt && warmup_steps == 0) {
    throw ConfigError("inv_sqrt schedule needs warmup_steps >= 1");
  }
}

double lr_at(std::int64_t step, const Schedule& s) {
  if (step < 0) throw std::invalid_argument("negative step");
  if (step < s.warmup_steps) {
    return s.peak_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  if (s.kind == ScheduleKind::kInvSqrt) {
    if (step == 0) return s.peak_lr;
    return s.peak_lr *
           std::sqrt(static_cast<double>(s.warmup_steps) / static_cast<double>(step));
  }
  if (step >= s.total_steps) return 0.0;
  const double span = static_cast<double>(s.total_steps - s.warmup_steps);
  return s.peak_lr * static_cast<double>(s.total_steps - step) / span;
}

template void LossAccumulator::add(const Matrix<float>&, std::span<const TokenId>,
                                   const LossWeights*, Matrix<float>*);
template void LossAccumulator::add(const Matrix<double>&, std::span<const TokenId>,
                                   const LossWeights*, Matrix<double>*);
template LossBreakdown loss_breakdown(const Matrix<float>&, std::span<const TokenId>,
                                      const VocabLayout&, LossScheme, ObjectiveOptions);
template LossBreakdown loss_breakdown(const Matrix<double>&, std::span<const TokenId>,
                                      const VocabLayout&, LossScheme, ObjectiveOptions);
template void SentenceAccuracy::add(const Matrix<float>&, std::span<const TokenId>, bool,
                                    const VocabLayout&, ObjectiveOptions);
template void SentenceAccuracy::add(const Matrix<double>&, std::span<const TokenId>, bool,
                                    const VocabLayout&, ObjectiveOptions);
template std::optional<double> sentence_accuracy(const Matrix<float>&,
                                                 std::span<const TokenId>,
                                                 const VocabLayout&, ObjectiveOptions);
template std::optional<double> sentence_accuracy(const Matrix<double>&,
                                                 std::span<const TokenId>,
                                                 const VocabLayout&, ObjectiveOptions);

}  // namespace depth
