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

#include "depth/masks.h"

#include <fstream>
#include <numeric>

#include "depth/errors.h"

namespace depth {
namespace {

bool hierarchical(TokenId id, const VocabLayout& layout, MaskOptions opts) {
  return layout.is_sentence(id) || (opts.eosen_hierarchical && id == layout.eosen());
}

}  // namespace

std::size_t BoolMatrix::row_count(std::size_t r) const {
  const std::uint8_t* p = row(r);
  return static_cast<std::size_t>(std::accumulate(p, p + cols_, 0));
}

BoolMatrix build_encoder_mask(std::span<const TokenId> ids, const VocabLayout& layout,
                              MaskOptions opts) {
  const std::size_t n = ids.size();
  const TokenId pad = layout.pad();
  BoolMatrix mask(n, n);

  // Sentence interval [begin, end] for every position inside one.
  std::vector<std::size_t> sentence_begin(n, n);
  std::vector<std::size_t> sentence_end(n, n);
  std::size_t open = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (layout.is_sentence(ids[i])) {
      if (open != n) throw DataError("<SENT> at position " + std::to_string(open) +
                                     " has no closing <EOSEN>");
      open = i;
    } else if (ids[i] == layout.eosen() && open != n) {
      for (std::size_t j = open; j <= i; ++j) {
        sentence_begin[j] = open;
        sentence_end[j] = i;
      }
      open = n;
    }
  }
  if (open != n) {
    throw DataError("<SENT> at position " + std::to_string(open) + " has no closing <EOSEN>");
  }

  for (std::size_t r = 0; r < n; ++r) {
    if (ids[r] == pad) continue;
    if (hierarchical(ids[r], layout, opts) && sentence_begin[r] != n) {
      for (std::size_t c = sentence_begin[r]; c <= sentence_end[r]; ++c) {
        if (ids[c] != pad) mask.set(r, c, true);
      }
    } else {
      for (std::size_t c = 0; c < n; ++c) {
        if (ids[c] != pad) mask.set(r, c, true);
      }
    }
  }
  return mask;
}

BoolMatrix build_decoder_mask(std::span<const TokenId> ids, const VocabLayout& layout,
                              MaskOptions opts) {
  const std::size_t n = ids.size();
  const TokenId pad = layout.pad();
  BoolMatrix mask(n, n);
  std::vector<std::size_t> hier_cols;
  for (std::size_t r = 0; r < n; ++r) {
    if (ids[r] == pad) continue;
    const bool h = hierarchical(ids[r], layout, opts);
    if (h) {
      for (const std::size_t c : hier_cols) mask.set(r, c, true);
      mask.set(r, r, true);
      hier_cols.push_back(r);
    } else {
      for (std::size_t c = 0; c <= r; ++c) {
        if (ids[c] != pad) mask.set(r, c, true);
      }
    }
  }
  return mask;
}

BoolMatrix build_cross_mask(std::span<const TokenId> dec, std::span<const TokenId> enc,
                            const VocabLayout& layout, MaskOptions opts) {
  const TokenId pad = layout.pad();
  BoolMatrix mask(dec.size(), enc.size());
  std::vector<std::size_t> all_cols;
  std::vector<std::size_t> hier_cols;
  for (std::size_t c = 0; c < enc.size(); ++c) {
    if (enc[c] == pad) continue;
    all_cols.push_back(c);
    if (hierarchical(enc[c], layout, opts)) hier_cols.push_back(c);
  }
  for (std::size_t r = 0; r < dec.size(); ++r) {
    if (dec[r] == pad) continue;
    const auto& cols = hierarchical(dec[r], layout, opts) ? hier_cols : all_cols;
    for (const std::size_t c : cols) mask.set(r, c, true);
  }
  return mask;
}

AttentionMaskSet build_masks(std::span<const TokenId> encoder_ids,
                             std::span<const TokenId> decoder_input_ids,
                             const VocabLayout& layout, MaskOptions opts) {
  return {build_encoder_mask(encoder_ids, layout, opts),
          build_decoder_mask(decoder_input_ids, layout, opts),
          build_cross_mask(decoder_input_ids, encoder_ids, layout, opts)};
}

ConformanceReport verify_masks(std::span<const TokenId> enc, std::span<const TokenId> dec,
                               const AttentionMaskSet& masks, const VocabLayout& layout,
                               MaskOptions opts) {
  ConformanceReport report;
  const TokenId pad = layout.pad();
  const TokenId eosen = layout.eosen();
  auto is_sent = [&](TokenId t) {
    return layout.is_sentence(t) || (opts.eosen_hierarchical && t == eosen);
  };
  // True when no <EOSEN> occurs in ids[from, to).
  auto no_eosen_between = [&](std::span<const TokenId> ids, std::size_t from, std::size_t to) {
    for (std::size_t x = from; x < to; ++x) {
      if (ids[x] == eosen) return false;
    }
    return true;
  };

  auto encoder_cell = [&](std::size_t i, std::size_t j) {
    if (enc[i] == pad || enc[j] == pad) return false;
    if (!is_sent(enc[i])) return true;
    if (enc[i] == eosen) return j <= i && no_eosen_between(enc, j, i);
    return j >= i && no_eosen_between(enc, i, j);
  };
  auto decoder_cell = [&](std::size_t i, std::size_t j) {
    if (dec[i] == pad || dec[j] == pad) return false;
    if (j > i) return false;
    if (j == i) return true;
    if (is_sent(dec[i])) return is_sent(dec[j]);
    return true;
  };
  auto cross_cell = [&](std::size_t i, std::size_t j) {
    if (dec[i] == pad || enc[j] == pad) return false;
    if (is_sent(dec[i])) return is_sent(enc[j]);
    return true;
  };

  auto check = [&](const char* name, const BoolMatrix& m, std::size_t rows, std::size_t cols,
                   auto&& cell) {
    if (m.rows() != rows || m.cols() != cols) {
      report.mismatches.push_back({name, m.rows(), m.cols(), true, false});
      return;
    }
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const bool expected = cell(i, j);
        ++report.cells_checked;
        if (expected != m(i, j)) report.mismatches.push_back({name, i, j, expected, m(i, j)});
      }
    }
  };
  check("enc_self", masks.enc_self, enc.size(), enc.size(), encoder_cell);
  check("dec_self", masks.dec_self, dec.size(), dec.size(), decoder_cell);
  check("cross", masks.cross, dec.size(), enc.size(), cross_cell);
  return report;
}

std::string render_ascii(const BoolMatrix& m) {
  std::string out;
  out.reserve(m.rows() * (m.cols() + 1));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out.push_back(m(r, c) ? '#' : '.');
    out.push_back('\n');
  }
  return out;
}

void write_pbm(const BoolMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P1\n" << m.cols() << ' ' << m.rows() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out << (m(r, c) ? '1' : '0') << (c + 1 == m.cols() ? '\n' : ' ');
    }
  }
}

}  // namespace depth
