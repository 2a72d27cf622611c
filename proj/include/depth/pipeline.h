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

#ifndef DEPTH_PIPELINE_H_
#define DEPTH_PIPELINE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "depth/corpus_io.h"
#include "depth/corruptor.h"
#include "depth/segmenter.h"
#include "depth/tokenizer.h"
#include "depth/vocab.h"

namespace depth {

// Worker threads for `jobs` independent items: hardware concurrency capped by
// the DEPTH_THREADS environment variable, never more than `jobs`, at least 1.
unsigned worker_count(std::size_t jobs);

// Tokenizes every document. Output order follows input order whatever the
// number of workers.
std::vector<TokenizedExample> tokenize_documents(const Vocab& vocab, const Segmenter& segmenter,
                                                 std::span<const Document> docs,
                                                 std::uint64_t seed, unsigned workers = 0);

struct CorruptionPlan {
  std::uint32_t batch_size = 16;
  std::uint32_t epochs = 1;
  // Visit documents in a fresh seeded order every epoch.
  bool shuffle_order = true;
};

// Corrupts `docs` for plan.epochs passes. Consecutive runs of batch_size
// documents share a batch_index, which numbers batches across passes.
// Dropped examples leave their batch short. Output order is deterministic.
std::vector<CorruptedExample> corrupt_documents(std::span<const TokenizedExample> docs,
                                                const VocabLayout& layout,
                                                const CorruptionConfig& cfg,
                                                const CorruptionPlan& plan,
                                                unsigned workers = 0);

}  // namespace depth

#endif  // DEPTH_PIPELINE_H_
