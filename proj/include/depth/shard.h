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

#ifndef DEPTH_SHARD_H_
#define DEPTH_SHARD_H_

// Shard file layout (all integers little-endian):
//
//   "DPTHSHRD" u32 version
//   u32 objective (0 depth, 1 t5)  u32 n_subwords  u32 k
//   f64 p  f64 lambda  u32 max_span  f64 shuffle_prob  u32 max_len
//   u64 global_seed  u32 batch_size
//   repeated records:
//     u32 record_bytes (length of everything below, per record)
//     u64 doc_id  u64 batch_index  u32 flags (bit0 shuffled, bit1 t5)
//     u32 n_enc  u32 n_dec  u32 n_tgt  u32 n_spans  u32 m
//     u32 body_tokens  u32 masked_tokens  u32 mask_budget
//     u32[n_enc] encoder  u32[n_dec] decoder input  u32[n_tgt] target
//     n_spans x (u32 sentence_index, u32 start, u32 length, u32 sentinel_z)
//     u32[m] permutation

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include "depth/corruptor.h"
#include "depth/vocab.h"

namespace depth {

struct ShardHeader {
  VocabLayout layout;
  CorruptionConfig corruption;
  std::uint32_t batch_size = 16;

  Objective objective() const { return corruption.objective; }
};

class ShardWriter {
 public:
  ShardWriter(const std::filesystem::path& path, const ShardHeader& header);
  void write(const CorruptedExample& ex);
  void close();
  std::uint64_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t count_ = 0;
};

class ShardReader {
 public:
  explicit ShardReader(const std::filesystem::path& path);
  const ShardHeader& header() const { return header_; }
  std::optional<CorruptedExample> next();

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  ShardHeader header_;
};

struct Shard {
  ShardHeader header;
  std::vector<CorruptedExample> examples;

  static Shard load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

// Recomputes sentence_positions_* from the id arrays.
void index_sentence_positions(CorruptedExample& ex, const VocabLayout& layout);

}  // namespace depth

#endif  // DEPTH_SHARD_H_
