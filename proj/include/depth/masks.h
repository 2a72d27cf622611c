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

#ifndef DEPTH_MASKS_H_
#define DEPTH_MASKS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "depth/vocab.h"

namespace depth {

// Dense row-major boolean matrix; true means attention is allowed.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  BoolMatrix(std::size_t rows, std::size_t cols, bool value = false)
      : rows_(rows), cols_(cols), cells_(rows * cols, value ? 1 : 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool operator()(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { cells_[r * cols_ + c] = v ? 1 : 0; }
  const std::uint8_t* row(std::size_t r) const { return cells_.data() + r * cols_; }
  std::size_t row_count(std::size_t r) const;

  bool operator==(const BoolMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> cells_;
};

struct AttentionMaskSet {
  BoolMatrix enc_self;  // Le x Le
  BoolMatrix dec_self;  // Ld x Ld
  BoolMatrix cross;     // Ld x Le
};

struct MaskOptions {
  // Treat <EOSEN> like <SENT_i> in every rule (alternative reading).
  bool eosen_hierarchical = false;
};

// Encoder: regular tokens see every non-pad column; a <SENT_i> row sees its
// own sentence, from itself through the matching <EOSEN>. Throws DataError
// on a <SENT_i> with no closing <EOSEN>.
BoolMatrix build_encoder_mask(std::span<const TokenId> encoder_ids,
                              const VocabLayout& layout, MaskOptions opts = {});

// Decoder: causal; a <SENT_i> row is further limited to earlier <SENT_*>
// columns, plus itself.
BoolMatrix build_decoder_mask(std::span<const TokenId> decoder_input_ids,
                              const VocabLayout& layout, MaskOptions opts = {});

// Cross: regular decoder rows see every non-pad encoder column; <SENT_i>
// rows see only the encoder's <SENT_*> columns.
BoolMatrix build_cross_mask(std::span<const TokenId> decoder_input_ids,
                            std::span<const TokenId> encoder_ids,
                            const VocabLayout& layout, MaskOptions opts = {});

AttentionMaskSet build_masks(std::span<const TokenId> encoder_ids,
                             std::span<const TokenId> decoder_input_ids,
                             const VocabLayout& layout, MaskOptions opts = {});

struct MaskMismatch {
  std::string matrix;  // "enc_self", "dec_self" or "cross"
  std::size_t row = 0;
  std::size_t col = 0;
  bool expected = false;
  bool actual = false;
};

struct ConformanceReport {
  std::vector<MaskMismatch> mismatches;
  std::size_t cells_checked = 0;
  bool ok() const { return mismatches.empty(); }
};

// Re-derives every cell with a literal per-cell predicate (no shared code
// with the builders) and lists disagreements. Shape mismatches are reported
// as a single mismatch at (rows, cols) of the offending matrix.
ConformanceReport verify_masks(std::span<const TokenId> encoder_ids,
                               std::span<const TokenId> decoder_input_ids,
                               const AttentionMaskSet& masks,
                               const VocabLayout& layout, MaskOptions opts = {});

std::string render_ascii(const BoolMatrix& m);
// Plain PBM (P1); allowed cells are black.
void write_pbm(const BoolMatrix& m, const std::filesystem::path& path);

}  // namespace depth

#endif  // DEPTH_MASKS_H_
