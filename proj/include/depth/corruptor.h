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

#ifndef DEPTH_CORRUPTOR_H_
#define DEPTH_CORRUPTOR_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "depth/random.h"
#include "depth/tokenizer.h"
#include "depth/vocab.h"

namespace depth {

enum class Objective : std::uint32_t { kDepth = 0, kT5 = 1 };

Objective parse_objective(const std::string& name);
std::string to_string(Objective objective);

struct CorruptionConfig {
  double p = 0.3;           // mask fraction of body tokens
  double lambda = 3.0;      // mean span length
  std::uint32_t max_span = 10;
  double shuffle_prob = 0.5;
  std::uint32_t max_len = 512;
  Objective objective = Objective::kDepth;
  std::uint64_t global_seed = 0;

  void validate() const;
};

// For DEPTH, `start` is an offset into the body of sentence `sentence_index`.
// For the T5 baseline there is one flat segment: sentence_index is 0 and
// `start` indexes the concatenated bodies.
struct SpanRecord {
  std::uint32_t sentence_index = 0;
  std::uint32_t start = 0;
  std::uint32_t length = 0;
  std::uint32_t sentinel_z = 0;

  bool operator==(const SpanRecord&) const = default;
};

struct CorruptedExample {
  std::uint64_t doc_id = 0;
  std::uint64_t batch_index = 0;
  Objective objective = Objective::kDepth;
  bool shuffled = false;
  std::vector<TokenId> encoder_ids;
  std::vector<TokenId> decoder_input_ids;
  std::vector<TokenId> target_ids;
  std::vector<SpanRecord> spans;  // sorted by (sentence_index, start)
  // permutation[i] = encoder position of original sentence i.
  std::vector<std::uint32_t> permutation;
  // Indices of <SENT_i> tokens in encoder_ids.
  std::vector<std::uint32_t> sentence_positions_enc;
  // Indices of <SENT_i> tokens in target_ids (decoder output positions).
  std::vector<std::uint32_t> sentence_positions_dec;
  std::uint32_t body_tokens = 0;    // n_reg after truncation
  std::uint32_t masked_tokens = 0;  // realized masked count
  std::uint32_t mask_budget = 0;    // round(p * n_reg)

  std::size_t m() const { return permutation.size(); }
  bool operator==(const CorruptedExample&) const = default;
};

// Cuts an example so its uncorrupted encoder form fits in max_len. Whole
// sentences are kept while they fit; the next one is cut at the token level
// (its <EOSEN> reinstated) if at least one body token fits. Returns nullopt
// for DEPTH when even the first sentence does not fit whole.
std::optional<TokenizedExample> fit_to_length(const TokenizedExample& ex,
                                              const CorruptionConfig& cfg);

// Budget-loop span sampler: draw a start uniformly over unmasked body
// positions and a Geometric(lambda) length clipped to max_span and to the
// remaining budget; reject spans crossing a sentence boundary (DEPTH) or
// overlapping earlier spans. Stops at round(p * n_reg) masked tokens, after
// 10 * budget attempts, or at 100 spans.
std::vector<SpanRecord> sample_spans(const TokenizedExample& ex,
                                     const CorruptionConfig& cfg, Rng& rng);

// Pure function of (global_seed, batch_index).
bool decide_shuffle(std::uint64_t batch_index, const CorruptionConfig& cfg);

// Uniform over all m! orderings when shuffled, identity otherwise.
std::vector<std::uint32_t> permute(std::size_t m, bool shuffled, Rng& rng);

CorruptedExample build_depth_example(const TokenizedExample& ex,
                                     std::span<const SpanRecord> spans,
                                     std::span<const std::uint32_t> permutation,
                                     const VocabLayout& layout);

CorruptedExample build_t5_example(const TokenizedExample& ex,
                                  std::span<const SpanRecord> spans,
                                  const VocabLayout& layout);

// Full pipeline for one document. Randomness is keyed on
// (global_seed, doc_id, batch_index). nullopt when the example was dropped.
std::optional<CorruptedExample> corrupt_example(const TokenizedExample& ex,
                                                std::uint64_t batch_index,
                                                const VocabLayout& layout,
                                                const CorruptionConfig& cfg);

// Undoes the corruption: sentinels in the encoder are replaced by their
// target spans, sentences are put back in original order and frame tokens
// are stripped. Yields the concatenated original bodies.
std::vector<TokenId> uncorrupt(const CorruptedExample& ex,
                               const VocabLayout& layout);

// Multi-line human-readable rendering with token names.
std::string describe(const CorruptedExample& ex, const Vocab& vocab);

}  // namespace depth

#endif  // DEPTH_CORRUPTOR_H_
