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

#include "depth/vocab.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "depth/binary_io.h"
#include "depth/errors.h"

namespace depth {
namespace {

constexpr std::string_view kVocabMagic = "DPTHVOCB";
constexpr std::uint32_t kVocabVersion = 1;
constexpr std::uint32_t kNoChild = UINT32_MAX;

std::string quote_bytes(std::string_view bytes) {
  std::string out = "\"";
  for (const char ch : bytes) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == '"' || c == '\\') {
      out.push_back('\\');
      out.push_back(ch);
    } else if (c >= 0x20 && c < 0x7F) {
      out.push_back(ch);
    } else {
      static const char* kHex = "0123456789abcdef";
      out += "\\x";
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  out.push_back('"');
  return out;
}

}  // namespace

TokenKind VocabLayout::kind(TokenId id) const {
  if (is_subword(id)) return TokenKind::kSubword;
  if (is_sentinel(id)) return TokenKind::kSentinel;
  if (is_sentence(id)) return TokenKind::kSentence;
  if (id == eosen()) return TokenKind::kEndOfSentence;
  if (id == eos()) return TokenKind::kEos;
  if (id == bos()) return TokenKind::kBos;
  if (id == pad()) return TokenKind::kPad;
  return TokenKind::kUnk;
}

Vocab::Vocab(std::vector<std::string> subwords, std::uint32_t k)
    : subwords_(std::move(subwords)) {
  if (k == 0) throw ConfigError("sentence-token count k must be positive");
  if (subwords_.size() < kNumByteUnits) {
    throw ConfigError("subword table must contain the 256 byte units");
  }
  for (std::uint32_t b = 0; b < kNumByteUnits; ++b) {
    if (subwords_[b].size() != 1 ||
        static_cast<unsigned char>(subwords_[b][0]) != b) {
      throw ConfigError("subword " + std::to_string(b) +
                        " is not the expected byte unit");
    }
  }
  layout_.n_subwords = static_cast<std::uint32_t>(subwords_.size());
  layout_.k = k;
  build_trie();
}

void Vocab::build_trie() {
  trie_.assign(1, TrieNode{});
  for (TokenId id = 0; id < subwords_.size(); ++id) {
    const std::string& piece = subwords_[id];
    if (piece.empty()) throw ConfigError("empty subword at id " + std::to_string(id));
    std::uint32_t node = 0;
    for (const char ch : piece) {
      const auto byte = static_cast<unsigned char>(ch);
      std::uint32_t next = child(node, byte);
      if (next == kNoChild) {
        next = static_cast<std::uint32_t>(trie_.size());
        trie_.emplace_back();
        auto& kids = trie_[node].children;
        kids.insert(std::lower_bound(kids.begin(), kids.end(),
                                     std::make_pair(byte, std::uint32_t{0})),
                    {byte, next});
      }
      node = next;
    }
    if (trie_[node].id != UINT32_MAX) {
      throw ConfigError("duplicate subword " + quote_bytes(piece));
    }
    trie_[node].id = id;
  }
}

std::uint32_t Vocab::child(std::uint32_t node, unsigned char byte) const {
  const auto& kids = trie_[node].children;
  auto it = std::lower_bound(kids.begin(), kids.end(),
                             std::make_pair(byte, std::uint32_t{0}));
  if (it == kids.end() || it->first != byte) return kNoChild;
  return it->second;
}

std::vector<TokenId> Vocab::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::uint32_t node = 0;
    TokenId best = UINT32_MAX;
    std::size_t best_len = 0;
    for (std::size_t i = pos; i < text.size(); ++i) {
      node = child(node, static_cast<unsigned char>(text[i]));
      if (node == kNoChild) break;
      if (trie_[node].id != UINT32_MAX) {
        best = trie_[node].id;
        best_len = i + 1 - pos;
      }
    }
    ids.push_back(best);  // byte units guarantee best_len >= 1
    pos += best_len;
  }
  return ids;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (const TokenId id : ids) {
    if (!layout_.valid(id)) {
      throw DataError("cannot decode token id " + std::to_string(id) +
                      " (vocabulary size " + std::to_string(size()) + ")");
    }
    if (layout_.is_subword(id)) {
      out += subwords_[id];
    } else {
      out += token_name(id);
    }
  }
  return out;
}

std::string Vocab::token_name(TokenId id) const {
  switch (layout_.kind(id)) {
    case TokenKind::kSubword:
      return quote_bytes(subwords_[id]);
    case TokenKind::kSentinel:
      return "<special_token_" + std::to_string(layout_.sentinel_index(id)) + ">";
    case TokenKind::kSentence:
      return "<SENT_" + std::to_string(id - layout_.sentence_begin() + 1) + ">";
    case TokenKind::kEndOfSentence:
      return "<EOSEN>";
    case TokenKind::kEos:
      return "<EOS>";
    case TokenKind::kBos:
      return "<BOS>";
    case TokenKind::kPad:
      return "<PAD>";
    case TokenKind::kUnk:
      break;
  }
  if (!layout_.valid(id)) return "<INVALID_" + std::to_string(id) + ">";
  return "<UNK>";
}

void Vocab::write(std::ostream& out) const {
  binio::put_bytes(out, kVocabMagic);
  binio::put_u32(out, kVocabVersion);
  binio::put_u32(out, layout_.k);
  binio::put_u32(out, layout_.n_subwords);
  binio::put_u32(out, kNumSentinels);
  binio::put_u32(out, kNumControlTokens);
  for (const auto& piece : subwords_) binio::put_string(out, piece);
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
  write(out);
  if (!out) throw DataError("I/O error writing " + path.string());
}

Vocab Vocab::read(std::istream& in) {
  binio::expect_magic(in, kVocabMagic, "vocabulary");
  const std::uint32_t version = binio::get_u32(in, "vocab version");
  if (version != kVocabVersion) {
    throw DataError("unsupported vocabulary version " + std::to_string(version));
  }
  const std::uint32_t k = binio::get_u32(in, "vocab k");
  const std::uint32_t n = binio::get_u32(in, "vocab subword count");
  const std::uint32_t sentinels = binio::get_u32(in, "vocab sentinel count");
  const std::uint32_t controls = binio::get_u32(in, "vocab control count");
  if (sentinels != kNumSentinels || controls != kNumControlTokens) {
    throw DataError("vocabulary reserved-range sizes do not match this build");
  }
  if (n < kNumByteUnits || n > (1u << 24)) {
    throw DataError("implausible subword count " + std::to_string(n));
  }
  std::vector<std::string> pieces;
  pieces.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    pieces.push_back(binio::get_string(in, 1u << 16, "subword entry"));
  }
  try {
    return Vocab(std::move(pieces), k);
  } catch (const ConfigError& e) {
    throw DataError(std::string("corrupt vocabulary: ") + e.what());
  }
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary file " + path.string());
  return read(in);
}

}  // namespace depth
