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

#ifndef DEPTH_TOKENIZER_H_
#define DEPTH_TOKENIZER_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "depth/corpus_io.h"
#include "depth/segmenter.h"
#include "depth/vocab.h"

namespace depth {

// Greedy pair-merging trainer. Text is split into whitespace-delimited
// chunks (each chunk after the first carries its leading space) and merges
// never cross chunk boundaries. Ties on pair frequency break toward the
// lexicographically smaller concatenation.
class BpeTrainer {
 public:
  void add_text(std::string_view text);
  bool empty() const { return chunk_counts_.empty(); }

  // `target_size` caps the subword table (byte units included). Merging stops
  // early once no pair occurs at least twice.
  Vocab train(std::uint32_t target_size,
              std::uint32_t k = kDefaultSentenceTokens) const;

 private:
  std::unordered_map<std::string, std::uint64_t> chunk_counts_;
};

Vocab train_vocab(CorpusReader& corpus, std::uint32_t target_size,
                  std::uint32_t k = kDefaultSentenceTokens);
Vocab train_vocab(std::span<const Document> corpus, std::uint32_t target_size,
                  std::uint32_t k = kDefaultSentenceTokens);

struct TokenizedSentence {
  TokenId sent_id = 0;           // a <SENT_i> id
  std::vector<TokenId> body;     // subword ids only
};

struct TokenizedExample {
  std::uint64_t doc_id = 0;
  std::vector<TokenizedSentence> sentences;

  std::size_t m() const { return sentences.size(); }
  std::size_t body_token_count() const;
};

// T(s) = t(f(s)): segment, encode each sentence, drop empty bodies, keep the
// first k sentences and give them distinct <SENT_i> ids drawn uniformly
// without replacement from a generator seeded by (global_seed, doc_id).
TokenizedExample depth_tokenize(const Vocab& vocab, const Segmenter& segmenter,
                                const Document& doc, std::uint64_t global_seed);

// (SENT body EOSEN)+ EOS, no corruption. The reference layout the corruptor
// builds on.
std::vector<TokenId> flatten(const TokenizedExample& ex, const VocabLayout& layout);

// True when `ids` matches (SENT body+ EOSEN)+ EOS with subword/sentinel
// bodies.
bool is_well_framed(std::span<const TokenId> ids, const VocabLayout& layout);

}  // namespace depth

#endif  // DEPTH_TOKENIZER_H_
