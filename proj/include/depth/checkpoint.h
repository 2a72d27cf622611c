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

#ifndef DEPTH_CHECKPOINT_H_
#define DEPTH_CHECKPOINT_H_

// Checkpoint file layout (integers and floats little-endian):
//
//   "DPTHCKPT" u32 version
//   u32 header_bytes, then that many bytes of "key=value\n" text: the model
//     config (d_model, n_heads, enc_layers, dec_layers, d_ff, vocab_size,
//     max_len, dropout, init_seed), step, adam_t and free-form metadata
//   u32 tensor_count
//   repeated tensors:
//     u32 name_bytes, name, u32 ndim (always 2), u32 rows, u32 cols,
//     rows * cols f32 in row-major order
//   "DPTHEND!"
//
// Model tensors use the parameter names; optimizer moments are stored as
// "adam_m/<name>" and "adam_v/<name>".

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "depth/model.h"

namespace depth {

struct Checkpoint {
  ModelConfig model;
  std::int64_t step = 0;
  std::uint64_t adam_t = 0;
  std::map<std::string, std::string> meta;
  ParameterSet<float> params;
  // Empty when the checkpoint carries no optimizer state.
  ParameterSet<float> adam_m;
  ParameterSet<float> adam_v;

  bool has_optimizer_state() const { return adam_m.size() != 0; }
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Throws DataError on a corrupt file and on a vocab size different from
// `expected_vocab_size` when given.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<int> expected_vocab_size = std::nullopt);

}  // namespace depth

#endif  // DEPTH_CHECKPOINT_H_
