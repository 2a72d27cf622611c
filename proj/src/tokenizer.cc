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

#include "depth/tokenizer.h"

#include <algorithm>
#include <map>
#include <numeric>

#include "depth/errors.h"
#include "depth/random.h"

namespace depth {
namespace {

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

void BpeTrainer::add_text(std::string_view text) {
  const std::string normalized = normalize_whitespace(text);
  std::size_t start = 0;
  while (start < normalized.size()) {
    std::size_t end = normalized.find(' ', start + 1);
    if (end == std::string::npos) end = normalized.size();
    ++chunk_counts_[normalized.substr(start, end - start)];
    start = end;
  }
}

Vocab BpeTrainer::train(std::uint32_t target_size, std::uint32_t k) const {
  if (target_size < kMinSubwordTableSize) {
    throw ConfigError("target vocabulary size must be >= " +
                      std::to_string(kMinSubwordTableSize) + ", got " +
                      std::to_string(target_size));
  }
  if (chunk_counts_.empty()) throw DataError("cannot train a vocabulary on an empty corpus");

  std::vector<std::string> pieces;
  pieces.reserve(target_size);
  for (std::uint32_t b = 0; b < kNumByteUnits; ++b) {
    pieces.emplace_back(1, static_cast<char>(b));
  }
  std::unordered_map<std::string, std::uint32_t> piece_ids;
  for (std::uint32_t b = 0; b < kNumByteUnits; ++b) piece_ids[pieces[b]] = b;

  // Sorted so that iteration order (and therefore every tie) is stable.
  std::map<std::string, std::uint64_t> ordered(chunk_counts_.begin(),
                                               chunk_counts_.end());
  struct Word {
    std::vector<std::uint32_t> symbols;
    std::uint64_t count;
  };
  std::vector<Word> words;
  words.reserve(ordered.size());
  for (const auto& [chunk, count] : ordered) {
    Word w{{}, count};
    for (const char c : chunk) w.symbols.push_back(static_cast<unsigned char>(c));
    words.push_back(std::move(w));
  }

  std::unordered_map<std::uint64_t, std::uint64_t> pair_counts;
  while (pieces.size() < target_size) {
    pair_counts.clear();
    for (const Word& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        pair_counts[pair_key(w.symbols[i], w.symbols[i + 1])] += w.count;
      }
    }
    std::uint64_t best_key = 0;
    std::uint64_t best_count = 0;
    std::string best_piece;
    for (const auto& [key, count] : pair_counts) {
      if (count < best_count) continue;
      std::string piece = pieces[key >> 32] + pieces[key & 0xFFFFFFFFu];
      if (count > best_count || piece < best_piece ||
          (piece == best_piece && key < best_key)) {
        best_key = key;
        best_count = count;
        best_piece = std::move(piece);
      }
    }
    if (best_count < 2) break;

    const auto a = static_cast<std::uint32_t>(best_key >> 32);
    const auto b = static_cast<std::uint32_t>(best_key & 0xFFFFFFFFu);
    std::uint32_t merged;
    if (auto it = piece_ids.find(best_piece); it != piece_ids.end()) {
      merged = it->second;
    } else {
      merged = static_cast<std::uint32_t>(pieces.size());
      pieces.push_back(best_piece);
      piece_ids.emplace(best_piece, merged);
    }
    for (Word& w : words) {
      auto& s = w.symbols;
      std::size_t out = 0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == a && s[i + 1] == b) {
          s[out++] = merged;
          ++i;
        } else {
          s[out++] = s[i];
        }
      }
      s.resize(out);
    }
  }
  return Vocab(std::move(pieces), k);
}

Vocab train_vocab(CorpusReader& corpus, std::uint32_t target_size,
                  std::uint32_t k) {
  BpeTrainer trainer;
  while (auto doc = corpus.next()) trainer.add_text(doc->text);
  return trainer.train(target_size, k);
}

Vocab train_vocab(std::span<const Document> corpus, std::uint32_t target_size,
                  std::uint32_t k) {
  BpeTrainer trainer;
  for (const Document& doc : corpus) trainer.add_text(doc.text);
  return trainer.train(target_size, k);
}

std::size_t TokenizedExample::body_token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.body.size();
  return n;
}

TokenizedExample depth_tokenize(const Vocab& vocab, const Segmenter& segmenter,
                                const Document& doc, std::uint64_t global_seed) {
  TokenizedExample ex;
  ex.doc_id = doc.doc_id;
  const std::uint32_t k = vocab.k();
  for (const std::string& sentence : segmenter.segment(doc.text)) {
    if (ex.sentences.size() == k) break;
    std::vector<TokenId> body = vocab.encode(sentence);
    if (body.empty()) continue;
    ex.sentences.push_back({0, std::move(body)});
  }

  // Partial Fisher-Yates over {1..k}.
  Rng rng(derive_seed(
      {global_seed, static_cast<std::uint64_t>(Stream::kSentenceIds), doc.doc_id}));
  std::vector<std::uint32_t> pool(k);
  std::iota(pool.begin(), pool.end(), 1u);
  for (std::size_t i = 0; i < ex.sentences.size(); ++i) {
    const std::size_t j = i + rng.below(k - i);
    std::swap(pool[i], pool[j]);
    ex.sentences[i].sent_id = vocab.layout().sentence(pool[i]);
  }
  return ex;
}

std::vector<TokenId> flatten(const TokenizedExample& ex, const VocabLayout& layout) {
  std::vector<TokenId> out;
  out.reserve(ex.body_token_count() + 2 * ex.m() + 1);
  for (const auto& s : ex.sentences) {
    out.push_back(s.sent_id);
    out.insert(out.end(), s.body.begin(), s.body.end());
    out.push_back(layout.eosen());
  }
  out.push_back(layout.eos());
  return out;
}

bool is_well_framed(std::span<const TokenId> ids, const VocabLayout& layout) {
  if (ids.size() < 4 || ids.back() != layout.eos()) return false;
  std::size_t i = 0;
  const std::size_t end = ids.size() - 1;
  while (i < end) {
    if (!layout.is_sentence(ids[i])) return false;
    ++i;
    std::size_t body = 0;
    while (i < end && (layout.is_subword(ids[i]) || layout.is_sentinel(ids[i]))) {
      ++i;
      ++body;
    }
    if (body == 0 || i == end || ids[i] != layout.eosen()) return false;
    ++i;
  }
  return true;
}

}  // namespace depth
