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

#ifndef DEPTH_VOCAB_H_
#define DEPTH_VOCAB_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace depth {

using TokenId = std::uint32_t;

inline constexpr std::uint32_t kNumSentinels = 100;
inline constexpr std::uint32_t kDefaultSentenceTokens = 20;
inline constexpr std::uint32_t kNumByteUnits = 256;
// <EOSEN>, <EOS>, <BOS>, <PAD>, <UNK>
inline constexpr std::uint32_t kNumControlTokens = 5;
inline constexpr std::uint32_t kMinSubwordTableSize = 300;

enum class TokenKind {
  kSubword,
  kSentinel,
  kSentence,
  kEndOfSentence,
  kEos,
  kBos,
  kPad,
  kUnk,
};

// ID space of the augmented vocabulary:
//
//   [0, n_subwords)                 subwords (first 256 are raw bytes)
//   [n_subwords, +100)              <special_token_0> .. <special_token_99>
//   [.., +k)                        <SENT_1> .. <SENT_k>
//   then <EOSEN>, <EOS>, <BOS>, <PAD>, <UNK>
struct VocabLayout {
  std::uint32_t n_subwords = kNumByteUnits;
  std::uint32_t k = kDefaultSentenceTokens;

  TokenId sentinel_begin() const { return n_subwords; }
  TokenId sentinel(std::uint32_t z) const { return sentinel_begin() + z; }
  TokenId sentence_begin() const { return n_subwords + kNumSentinels; }
  // 1-based, as in <SENT_1>.
  TokenId sentence(std::uint32_t i) const { return sentence_begin() + i - 1; }
  TokenId eosen() const { return sentence_begin() + k; }
  TokenId eos() const { return eosen() + 1; }
  TokenId bos() const { return eosen() + 2; }
  TokenId pad() const { return eosen() + 3; }
  TokenId unk() const { return eosen() + 4; }
  std::uint32_t size() const { return eosen() + kNumControlTokens; }

  TokenKind kind(TokenId id) const;
  bool valid(TokenId id) const { return id < size(); }
  bool is_subword(TokenId id) const { return id < n_subwords; }
  bool is_sentinel(TokenId id) const {
    return id >= sentinel_begin() && id < sentence_begin();
  }
  std::uint32_t sentinel_index(TokenId id) const { return id - sentinel_begin(); }
  // <SENT_i> only.
  bool is_sentence(TokenId id) const {
    return id >= sentence_begin() && id < eosen();
  }
  // The set S = {<SENT_1..k>, <EOSEN>}.
  bool in_sentence_set(TokenId id) const {
    return id >= sentence_begin() && id <= eosen();
  }
  bool is_reserved(TokenId id) const { return id >= n_subwords; }

  bool operator==(const VocabLayout&) const = default;
};

// Base subword vocabulary plus the reserved ranges. Immutable once built.
class Vocab {
 public:
  // `subwords` must start with the 256 single-byte units in byte order.
  Vocab(std::vector<std::string> subwords, std::uint32_t k);

  const VocabLayout& layout() const { return layout_; }
  std::uint32_t size() const { return layout_.size(); }
  std::uint32_t k() const { return layout_.k; }
  const std::vector<std::string>& subwords() const { return subwords_; }

  // Greedy longest match over raw bytes; never fails thanks to the byte units.
  std::vector<TokenId> encode(std::string_view text) const;
  // Subwords contribute their bytes, reserved IDs their printable names.
  std::string decode(std::span<const TokenId> ids) const;

  // Human-readable name, e.g. "<SENT_3>" or "\"the\"".
  std::string token_name(TokenId id) const;

  void save(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;
  static Vocab load(const std::filesystem::path& path);
  static Vocab read(std::istream& in);

 private:
  struct TrieNode {
    TokenId id = UINT32_MAX;
    std::vector<std::pair<unsigned char, std::uint32_t>> children;  // sorted
  };

  void build_trie();
  std::uint32_t child(std::uint32_t node, unsigned char byte) const;

  std::vector<std::string> subwords_;
  VocabLayout layout_;
  std::vector<TrieNode> trie_;
};

}  // namespace depth

#endif  // DEPTH_VOCAB_H_
