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

#include "depth/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "depth/errors.h"

namespace depth {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

std::string join_steps(const std::vector<std::int64_t>& steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(steps[i]);
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (warmup_steps > total_steps) {
    throw ConfigError("warmup_steps (" + std::to_string(warmup_steps) +
                      ") exceeds total_steps (" + std::to_string(total_steps) + ")");
  }
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
  for (std::int64_t s : checkpoint_steps) {
    if (s < 1) throw ConfigError("checkpoint steps must be >= 1");
  }
  schedule_config().validate();
}

Schedule TrainConfig::schedule_config() const {
  Schedule s;
  s.kind = schedule;
  s.peak_lr = peak_lr;
  s.warmup_steps = warmup_steps;
  s.total_steps = total_steps;
  return s;
}

std::string metrics_csv_header() {
  return "step,lr,total,sentence_loss,reconstruction_loss,sent_acc_shuffled,"
         "sent_acc_unshuffled,realized_mask_rate";
}

std::string metrics_csv_row(const MetricsRecord& r) {
  std::ostringstream out;
  out << r.step << "," << fmt(r.lr) << "," << fmt(r.loss.total) << ","
      << fmt(r.loss.sentence_loss) << "," << fmt(r.loss.reconstruction_loss) << ","
      << fmt_opt(r.sent_acc_shuffled) << "," << fmt_opt(r.sent_acc_unshuffled) << ","
      << fmt(r.realized_mask_rate);
  return out.str();
}

PaddedExample pad_example(const CorruptedExample& ex, std::size_t enc_len, std::size_t dec_len,
                          const VocabLayout& layout) {
  if (enc_len < ex.encoder_ids.size() || dec_len < ex.decoder_input_ids.size()) {
    throw std::invalid_argument("pad length shorter than the example");
  }
  PaddedExample p;
  p.encoder_ids = ex.encoder_ids;
  p.encoder_ids.resize(enc_len, layout.pad());
  p.decoder_input_ids = ex.decoder_input_ids;
  p.decoder_input_ids.resize(dec_len, layout.pad());
  p.target_ids = ex.target_ids;
  p.target_ids.resize(dec_len, kIgnoreTarget);
  return p;
}

template <typename T>
BatchStats run_batch(const Transformer<T>& model, std::span<const CorruptedExample* const> batch,
                     const VocabLayout& layout, const LossOptions& opts, ParameterSet<T>* grads,
                     Rng* dropout_rng, bool pad_to_batch_max) {
  BatchStats stats;
  stats.loss.scheme = opts.scheme;
  TargetCounts counts;
  std::size_t enc_max = 0, dec_max = 0;
  for (const CorruptedExample* ex : batch) {
    counts.add(ex->target_ids, layout, opts.objective);
    enc_max = std::max(enc_max, ex->encoder_ids.size());
    dec_max = std::max(dec_max, ex->decoder_input_ids.size());
    stats.body_tokens += ex->body_tokens;
    stats.masked_tokens += ex->masked_tokens;
  }
  if (counts.n_total == 0) return stats;
  const LossWeights weights = loss_weights(opts.scheme, counts);
  LossAccumulator acc(layout, opts.objective);

  for (const CorruptedExample* ex : batch) {
    std::span<const TokenId> enc = ex->encoder_ids;
    std::span<const TokenId> dec = ex->decoder_input_ids;
    std::span<const TokenId> tgt = ex->target_ids;
    PaddedExample padded;
    if (pad_to_batch_max) {
      padded = pad_example(*ex, enc_max, dec_max, layout);
      enc = padded.encoder_ids;
      dec = padded.decoder_input_ids;
      tgt = padded.target_ids;
    }
    const AttentionMaskSet masks = build_masks(enc, dec, layout, opts.masks);
    if (grads) {
      model.forward_backward(
          enc, dec, masks,
          [&](const Matrix<T>& logits, Matrix<T>& dlogits) {
            acc.add(logits, tgt, &weights, &dlogits);
            stats.accuracy.add(logits, tgt, ex->shuffled, layout, opts.objective);
          },
          *grads, dropout_rng);
    } else {
      const Matrix<T> logits = model.forward(enc, dec, masks);
      acc.add(logits, tgt);
      stats.accuracy.add(logits, tgt, ex->shuffled, layout, opts.objective);
    }
  }
  stats.loss = acc.result(opts.scheme);
  return stats;
}

template <typename T>
double clip_global_norm(ParameterSet<T>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads.tensors) {
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double v = static_cast<double>(g.data()[i]);
      sq += v * v;
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto& g : grads.tensors) g *= scale;
  }
  return norm;
}

void check_unpacked(const CorruptedExample& ex, const VocabLayout& layout) {
  auto fail = [&](const std::string& why) {
    throw DataError("example for doc " + std::to_string(ex.doc_id) +
                    " is not a single document: " + why);
  };
  const auto& enc = ex.encoder_ids;
  const auto& dec = ex.decoder_input_ids;
  const auto& tgt = ex.target_ids;
  if (enc.empty() || enc.back() != layout.eos()) fail("encoder does not end with <EOS>");
  if (std::count(enc.begin(), enc.end(), layout.eos()) != 1) fail("encoder holds several <EOS>");
  if (dec.empty() || dec.front() != layout.bos()) fail("decoder does not start with <BOS>");
  if (std::count(dec.begin(), dec.end(), layout.bos()) != 1) fail("decoder holds several <BOS>");
  if (tgt.size() != dec.size()) fail("target and decoder input lengths differ");
  if (tgt.empty() || tgt.back() != layout.eos()) fail("target does not end with <EOS>");
  if (std::count(tgt.begin(), tgt.end(), layout.eos()) != 1) fail("target holds several <EOS>");
}

MetricsRecord evaluate(const Transformer<float>& model, const Shard& val, const TrainConfig& cfg,
                       std::int64_t step, double lr) {
  if (val.examples.empty()) throw DataError("validation set is empty");
  std::vector<const CorruptedExample*> batch;
  const std::size_t limit = cfg.max_eval_examples == 0
                                ? val.examples.size()
                                : std::min(cfg.max_eval_examples, val.examples.size());
  for (std::size_t i = 0; i < limit; ++i) batch.push_back(&val.examples[i]);
  const BatchStats s = run_batch(model, std::span<const CorruptedExample* const>(batch),
                                 val.header.layout, cfg.loss);
  if (s.loss.n_total == 0) throw DataError("validation set has no target tokens");
  MetricsRecord r;
  r.step = step;
  r.lr = lr;
  r.loss = s.loss;
  r.sent_acc_shuffled = s.accuracy.shuffled();
  r.sent_acc_unshuffled = s.accuracy.unshuffled();
  r.realized_mask_rate =
      s.body_tokens ? static_cast<double>(s.masked_tokens) / static_cast<double>(s.body_tokens)
                    : 0.0;
  return r;
}

Trainer::Trainer(TrainConfig cfg, Transformer<float> model, const Shard& train, const Shard* val)
    : cfg_(std::move(cfg)), model_(std::move(model)), train_(train), val_(val) {
  cfg_.validate();
  layout_ = train_.header.layout;
  auto check_shard = [&](const Shard& s, const char* which) {
    if (s.header.objective() != cfg_.objective) {
      throw ConfigError(std::string(which) + " shard was built for objective " +
                        to_string(s.header.objective()) + " but training is configured for " +
                        to_string(cfg_.objective));
    }
    if (!(s.header.layout == layout_)) {
      throw ConfigError(std::string(which) + " shard uses a different vocabulary layout");
    }
  };
  check_shard(train_, "training");
  if (val_) check_shard(*val_, "validation");
  if (static_cast<std::uint64_t>(model_.config().vocab_size) != layout_.size()) {
    throw ConfigError("model vocab_size " + std::to_string(model_.config().vocab_size) +
                      " does not match the shard vocabulary (" + std::to_string(layout_.size()) +
                      ")");
  }
  if (train_.header.batch_size != cfg_.batch_size) {
    throw ConfigError("training shard was cut into batches of " +
                      std::to_string(train_.header.batch_size) + ", not " +
                      std::to_string(cfg_.batch_size));
  }
  const auto& ex = train_.examples;
  if (ex.empty()) throw DataError("training shard is empty");
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= ex.size(); ++i) {
    if (i == ex.size() || ex[i].batch_index != ex[begin].batch_index) {
      batches_.emplace_back(begin, i);
      begin = i;
    }
  }
  grads_ = model_.params().zeros_like();
  adam_m_ = model_.params().zeros_like();
  adam_v_ = model_.params().zeros_like();
}

void Trainer::restore(const Checkpoint& ckpt) {
  if (!(ckpt.model == model_.config())) {
    throw ConfigError("checkpoint model config differs from the configured model");
  }
  model_ = Transformer<float>(ckpt.model, ckpt.params);
  if (ckpt.has_optimizer_state()) {
    adam_m_ = ckpt.adam_m;
    adam_v_ = ckpt.adam_v;
    adam_m_.decays = adam_v_.decays = model_.params().decays;
  } else {
    adam_m_ = model_.params().zeros_like();
    adam_v_ = model_.params().zeros_like();
  }
  adam_t_ = ckpt.adam_t;
  step_ = ckpt.step;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.model = model_.config();
  c.step = step_;
  c.adam_t = adam_t_;
  c.meta["objective"] = to_string(cfg_.objective);
  c.meta["seed"] = std::to_string(cfg_.seed);
  c.meta["loss_scheme"] = to_string(cfg_.loss.scheme);
  c.params = model_.params();
  c.adam_m = adam_m_;
  c.adam_v = adam_v_;
  return c;
}

std::vector<const CorruptedExample*> Trainer::batch_for_step(std::int64_t step) const {
  if (step < 1) throw std::invalid_argument("training steps are numbered from 1");
  const std::uint64_t nb = batches_.size();
  const std::uint64_t cycle = static_cast<std::uint64_t>(step - 1) / nb;
  const std::uint64_t pos = static_cast<std::uint64_t>(step - 1) % nb;
  std::vector<std::uint64_t> order(nb);
  for (std::uint64_t i = 0; i < nb; ++i) order[i] = i;
  Rng rng(derive_seed({cfg_.seed, static_cast<std::uint64_t>(Stream::kBatchOrder), 1, cycle}));
  for (std::uint64_t i = nb; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto [begin, end] = batches_[order[pos]];
  std::vector<const CorruptedExample*> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(&train_.examples[i]);
  return out;
}

void Trainer::apply_adamw(double lr) {
  ++adam_t_;
  const float b1 = static_cast<float>(cfg_.beta1);
  const float b2 = static_cast<float>(cfg_.beta2);
  const float bc1 = static_cast<float>(1.0 - std::pow(cfg_.beta1, static_cast<double>(adam_t_)));
  const float bc2 = static_cast<float>(1.0 - std::pow(cfg_.beta2, static_cast<double>(adam_t_)));
  const float eps = static_cast<float>(cfg_.adam_eps);
  const float step_lr = static_cast<float>(lr);
  const float decay = static_cast<float>(lr * cfg_.weight_decay);
  auto& P = model_.params();
  for (std::size_t i = 0; i < P.size(); ++i) {
    auto p = P.tensors[i].array();
    const auto g = grads_.tensors[i].array();
    auto m = adam_m_.tensors[i].array();
    auto v = adam_v_.tensors[i].array();
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g.square();
    if (P.decays[i]) p -= decay * p;
    p -= step_lr * ((m / bc1) / ((v / bc2).sqrt() + eps));
  }
}

MetricsRecord Trainer::train_step() {
  const std::int64_t step = step_ + 1;
  const auto batch = batch_for_step(step);
  for (const CorruptedExample* ex : batch) check_unpacked(*ex, layout_);
  grads_.set_zero();
  Rng dropout(derive_seed({cfg_.seed, static_cast<std::uint64_t>(Stream::kDropout),
                           static_cast<std::uint64_t>(step)}));
  Rng* dropout_rng = model_.config().dropout > 0.0 ? &dropout : nullptr;
  const BatchStats s =
      run_batch(model_, std::span<const CorruptedExample* const>(batch), layout_, cfg_.loss,
                &grads_, dropout_rng, cfg_.pad_to_batch_max);
  if (!std::isfinite(s.loss.total) || !grads_.all_finite()) {
    throw NumericError("non-finite loss or gradient at step " + std::to_string(step));
  }
  MetricsRecord r;
  r.step = step;
  r.grad_norm = clip_global_norm(grads_, cfg_.clip_norm);
  r.lr = lr_at(step, cfg_.schedule_config());
  apply_adamw(r.lr);
  step_ = step;
  r.loss = s.loss;
  r.sent_acc_shuffled = s.accuracy.shuffled();
  r.sent_acc_unshuffled = s.accuracy.unshuffled();
  r.realized_mask_rate =
      s.body_tokens ? static_cast<double>(s.masked_tokens) / static_cast<double>(s.body_tokens)
                    : 0.0;
  return r;
}

MetricsRecord Trainer::evaluate() const {
  if (!val_) throw ConfigError("no validation shard configured");
  const double lr = step_ > 0 ? lr_at(step_, cfg_.schedule_config()) : 0.0;
  return depth::evaluate(model_, *val_, cfg_, step_, lr);
}

std::string describe_config(const TrainConfig& cfg, const ModelConfig& m) {
  std::ostringstream o;
  o << "objective=" << to_string(cfg.objective) << "\n"
    << "batch_size=" << cfg.batch_size << "\n"
    << "total_steps=" << cfg.total_steps << "\n"
    << "warmup_steps=" << cfg.warmup_steps << "\n"
    << "peak_lr=" << fmt(cfg.peak_lr) << "\n"
    << "schedule=" << to_string(cfg.schedule) << "\n"
    << "beta1=" << fmt(cfg.beta1) << "\n"
    << "beta2=" << fmt(cfg.beta2) << "\n"
    << "adam_eps=" << fmt(cfg.adam_eps) << "\n"
    << "weight_decay=" << fmt(cfg.weight_decay) << "\n"
    << "clip_norm=" << fmt(cfg.clip_norm) << "\n"
    << "eval_every=" << cfg.eval_every << "\n"
    << "checkpoint_steps=" << join_steps(cfg.checkpoint_steps) << "\n"
    << "seed=" << cfg.seed << "\n"
    << "loss_scheme=" << to_string(cfg.loss.scheme) << "\n"
    << "eosen_in_sentence_loss=" << (cfg.loss.objective.eosen_in_sentence_loss ? 1 : 0) << "\n"
    << "eosen_in_accuracy=" << (cfg.loss.objective.eosen_in_accuracy ? 1 : 0) << "\n"
    << "eosen_hierarchical=" << (cfg.loss.masks.eosen_hierarchical ? 1 : 0) << "\n"
    << "pad_to_batch_max=" << (cfg.pad_to_batch_max ? 1 : 0) << "\n"
    << "max_eval_examples=" << cfg.max_eval_examples << "\n"
    << "d_model=" << m.d_model << "\n"
    << "n_heads=" << m.n_heads << "\n"
    << "enc_layers=" << m.enc_layers << "\n"
    << "dec_layers=" << m.dec_layers << "\n"
    << "d_ff=" << m.d_ff << "\n"
    << "vocab_size=" << m.vocab_size << "\n"
    << "max_len=" << m.max_len << "\n"
    << "dropout=" << fmt(m.dropout) << "\n"
    << "init_seed=" << m.init_seed << "\n";
  return o.str();
}

void Trainer::run(const RunOptions& opts) {
  namespace fs = std::filesystem;
  fs::create_directories(opts.run_dir);
  const bool fresh = step_ == 0;
  {
    std::ofstream config(opts.run_dir / "config.txt", std::ios::trunc);
    config << describe_config(cfg_, model_.config());
    for (const auto& [k, v] : opts.extra_config) config << k << "=" << v << "\n";
  }
  const auto mode = fresh ? std::ios::trunc : std::ios::app;
  std::ofstream metrics(opts.run_dir / "metrics.csv", mode);
  std::ofstream train_log(opts.run_dir / "train_log.csv", mode);
  std::ofstream timing(opts.run_dir / "timing.csv", mode);
  if (!metrics || !train_log || !timing) {
    throw DataError("cannot write into run directory " + opts.run_dir.string());
  }
  if (fresh) {
    metrics << metrics_csv_header() << "\n";
    train_log << metrics_csv_header() << "\n";
    timing << "step,phase,wall_seconds\n";
  }
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  const std::set<std::int64_t> ckpt_steps(cfg_.checkpoint_steps.begin(),
                                          cfg_.checkpoint_steps.end());

  if (fresh && val_) {
    const MetricsRecord e = evaluate();
    metrics << metrics_csv_row(e) << "\n" << std::flush;
    timing << "0,eval," << fmt(elapsed()) << "\n";
  }
  while (step_ < cfg_.total_steps) {
    MetricsRecord r;
    try {
      r = train_step();
    } catch (const NumericError&) {
      if (model_.params().all_finite()) {
        save_checkpoint(checkpoint(), opts.run_dir / "ckpt_last_good.bin");
      }
      throw;
    }
    train_log << metrics_csv_row(r) << "\n";
    timing << step_ << ",train," << fmt(elapsed()) << "\n";
    const bool last = step_ == cfg_.total_steps;
    if (step_ % cfg_.eval_every == 0 || last) {
      const MetricsRecord e = val_ ? evaluate() : r;
      metrics << metrics_csv_row(e) << "\n" << std::flush;
      timing << step_ << ",eval," << fmt(elapsed()) << "\n";
      if (opts.progress) {
        *opts.progress << "eval step " << step_ << " total " << fmt(e.loss.total) << " sentence "
                       << fmt(e.loss.sentence_loss) << " reconstruction "
                       << fmt(e.loss.reconstruction_loss) << " acc_shuffled "
                       << fmt_opt(e.sent_acc_shuffled) << "\n";
      }
    }
    if (ckpt_steps.count(step_) || last) {
      save_checkpoint(checkpoint(), opts.run_dir / ("ckpt_" + std::to_string(step_) + ".bin"));
    }
    if (opts.progress && opts.progress_every > 0 && step_ % opts.progress_every == 0) {
      *opts.progress << "step " << step_ << " lr " << fmt(r.lr) << " loss " << fmt(r.loss.total)
                     << " grad_norm " << fmt(r.grad_norm) << " " << fmt(elapsed()) << "s\n";
    }
  }
  train_log.flush();
  timing.flush();
}

GradCheckResult grad_check(const Transformer<double>& model,
                           std::span<const CorruptedExample* const> batch,
                           const VocabLayout& layout, const GradCheckOptions& opts) {
  Transformer<double> work = model;
  ParameterSet<double> grads = work.params().zeros_like();
  run_batch(work, batch, layout, opts.loss, &grads);

  GradCheckResult result;
  Rng rng(derive_seed({opts.seed, static_cast<std::uint64_t>(Stream::kGradCheck)}));
  auto& P = work.params();
  for (std::size_t s = 0; s < opts.samples; ++s) {
    const std::size_t ti = static_cast<std::size_t>(rng.below(P.size()));
    Matrix<double>& t = P.tensors[ti];
    const Eigen::Index ei = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(t.size())));
    const double original = t.data()[ei];
    t.data()[ei] = original + opts.epsilon;
    const double up = run_batch(work, batch, layout, opts.loss).loss.total;
    t.data()[ei] = original - opts.epsilon;
    const double down = run_batch(work, batch, layout, opts.loss).loss.total;
    t.data()[ei] = original;
    const double numeric = (up - down) / (2.0 * opts.epsilon);
    const double analytic = grads.tensors[ti].data()[ei];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), opts.floor});
    const double rel = std::abs(analytic - numeric) / denom;
    ++result.checked;
    if (rel >= result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_param = P.names[ti] + "[" + std::to_string(ei) + "]";
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

template BatchStats run_batch(const Transformer<float>&, std::span<const CorruptedExample* const>,
                              const VocabLayout&, const LossOptions&, ParameterSet<float>*, Rng*,
                              bool);
template BatchStats run_batch(const Transformer<double>&,
                              std::span<const CorruptedExample* const>, const VocabLayout&,
                              const LossOptions&, ParameterSet<double>*, Rng*, bool);
template double clip_global_norm(ParameterSet<float>&, double);
template double clip_global_norm(ParameterSet<double>&, double);

}  // namespace depth
