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

#include "depth/shard.h"

#include <sstream>

#include "depth/binary_io.h"
#include "depth/errors.h"

namespace depth {
namespace {

constexpr std::string_view kShardMagic = "DPTHSHRD";
constexpr std::uint32_t kShardVersion = 1;
constexpr std::uint32_t kFlagShuffled = 1u << 0;
constexpr std::uint32_t kFlagT5 = 1u << 1;
constexpr std::uint32_t kMaxRecordBytes = 64u << 20;

void put_ids(std::ostream& out, const std::vector<TokenId>& ids) {
  for (const TokenId id : ids) binio::put_u32(out, id);
}

std::vector<std::uint32_t> get_u32s(std::istream& in, std::uint32_t n) {
  std::vector<std::uint32_t> v(n);
  for (auto& x : v) x = binio::get_u32(in, "shard record");
  return v;
}

}  // namespace

void index_sentence_positions(CorruptedExample& ex, const VocabLayout& layout) {
  ex.sentence_positions_enc.clear();
  ex.sentence_positions_dec.clear();
  for (std::size_t i = 0; i < ex.encoder_ids.size(); ++i) {
    if (layout.is_sentence(ex.encoder_ids[i]))
      ex.sentence_positions_enc.push_back(static_cast<std::uint32_t>(i));
  }
  for (std::size_t i = 0; i < ex.target_ids.size(); ++i) {
    if (layout.is_sentence(ex.target_ids[i]))
      ex.sentence_positions_dec.push_back(static_cast<std::uint32_t>(i));
  }
}

ShardWriter::ShardWriter(const std::filesystem::path& path, const ShardHeader& header)
    : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw DataError("cannot write shard " + path.string());
  const auto& c = header.corruption;
  binio::put_bytes(out_, kShardMagic);
  binio::put_u32(out_, kShardVersion);
  binio::put_u32(out_, static_cast<std::uint32_t>(c.objective));
  binio::put_u32(out_, header.layout.n_subwords);
  binio::put_u32(out_, header.layout.k);
  binio::put_f64(out_, c.p);
  binio::put_f64(out_, c.lambda);
  binio::put_u32(out_, c.max_span);
  binio::put_f64(out_, c.shuffle_prob);
  binio::put_u32(out_, c.max_len);
  binio::put_u64(out_, c.global_seed);
  binio::put_u32(out_, header.batch_size);
}

void ShardWriter::write(const CorruptedExample& ex) {
  std::ostringstream rec;
  std::uint32_t flags = 0;
  if (ex.shuffled) flags |= kFlagShuffled;
  if (ex.objective == Objective::kT5) flags |= kFlagT5;
  binio::put_u64(rec, ex.doc_id);
  binio::put_u64(rec, ex.batch_index);
  binio::put_u32(rec, flags);
  binio::put_u32(rec, static_cast<std::uint32_t>(ex.encoder_ids.size()));
  binio::put_u32(rec, static_cast<std::uint32_t>(ex.decoder_input_ids.size()));
  binio::put_u32(rec, static_cast<std::uint32_t>(ex.target_ids.size()));
  binio::put_u32(rec, static_cast<std::uint32_t>(ex.spans.size()));
  binio::put_u32(rec, static_cast<std::uint32_t>(ex.permutation.size()));
  binio::put_u32(rec, ex.body_tokens);
  binio::put_u32(rec, ex.masked_tokens);
  binio::put_u32(rec, ex.mask_budget);
  put_ids(rec, ex.encoder_ids);
  put_ids(rec, ex.decoder_input_ids);
  put_ids(rec, ex.target_ids);
  for (const auto& s : ex.spans) {
    binio::put_u32(rec, s.sentence_index);
    binio::put_u32(rec, s.start);
    binio::put_u32(rec, s.length);
    binio::put_u32(rec, s.sentinel_z);
  }
  for (const auto p : ex.permutation) binio::put_u32(rec, p);
  const std::string bytes = rec.str();
  binio::put_u32(out_, static_cast<std::uint32_t>(bytes.size()));
  binio::put_bytes(out_, bytes);
  ++count_;
}

void ShardWriter::close() {
  out_.flush();
  if (!out_) throw DataError("I/O error writing shard " + path_.string());
  out_.close();
}

ShardReader::ShardReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw DataError("cannot open shard " + path.string());
  binio::expect_magic(in_, kShardMagic, "shard");
  const std::uint32_t version = binio::get_u32(in_, "shard version");
  if (version != kShardVersion) {
    throw DataError("unsupported shard version " + std::to_string(version));
  }
  const std::uint32_t objective = binio::get_u32(in_, "shard header");
  if (objective > 1) throw DataError("shard header has unknown objective");
  auto& c = header_.corruption;
  c.objective = static_cast<Objective>(objective);
  header_.layout.n_subwords = binio::get_u32(in_, "shard header");
  header_.layout.k = binio::get_u32(in_, "shard header");
  c.p = binio::get_f64(in_, "shard header");
  c.lambda = binio::get_f64(in_, "shard header");
  c.max_span = binio::get_u32(in_, "shard header");
  c.shuffle_prob = binio::get_f64(in_, "shard header");
  c.max_len = binio::get_u32(in_, "shard header");
  c.global_seed = binio::get_u64(in_, "shard header");
  header_.batch_size = binio::get_u32(in_, "shard header");
}

std::optional<CorruptedExample> ShardReader::next() {
  if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;
  const std::uint32_t len = binio::get_u32(in_, "shard record length");
  if (len > kMaxRecordBytes) throw DataError("implausible shard record length");
  std::string bytes(len, '\0');
  binio::read_exact(in_, bytes.data(), len, "shard record");
  std::istringstream rec(bytes);

  CorruptedExample ex;
  ex.doc_id = binio::get_u64(rec, "shard record");
  ex.batch_index = binio::get_u64(rec, "shard record");
  const std::uint32_t flags = binio::get_u32(rec, "shard record");
  ex.shuffled = (flags & kFlagShuffled) != 0;
  ex.objective = (flags & kFlagT5) ? Objective::kT5 : Objective::kDepth;
  const std::uint32_t n_enc = binio::get_u32(rec, "shard record");
  const std::uint32_t n_dec = binio::get_u32(rec, "shard record");
  const std::uint32_t n_tgt = binio::get_u32(rec, "shard record");
  const std::uint32_t n_spans = binio::get_u32(rec, "shard record");
  const std::uint32_t m = binio::get_u32(rec, "shard record");
  ex.body_tokens = binio::get_u32(rec, "shard record");
  ex.masked_tokens = binio::get_u32(rec, "shard record");
  ex.mask_budget = binio::get_u32(rec, "shard record");
  const std::uint64_t expected =
      52ull + 4ull * (n_enc + n_dec + n_tgt + m) + 16ull * n_spans;
  if (expected != len) throw DataError("shard record length mismatch in " + path_.string());
  ex.encoder_ids = get_u32s(rec, n_enc);
  ex.decoder_input_ids = get_u32s(rec, n_dec);
  ex.target_ids = get_u32s(rec, n_tgt);
  ex.spans.resize(n_spans);
  for (auto& s : ex.spans) {
    s.sentence_index = binio::get_u32(rec, "shard span");
    s.start = binio::get_u32(rec, "shard span");
    s.length = binio::get_u32(rec, "shard span");
    s.sentinel_z = binio::get_u32(rec, "shard span");
  }
  ex.permutation = get_u32s(rec, m);

  const VocabLayout& layout = header_.layout;
  for (const auto* ids : {&ex.encoder_ids, &ex.decoder_input_ids, &ex.target_ids}) {
    for (const TokenId id : *ids) {
      if (!layout.valid(id)) {
        throw DataError("shard token id " + std::to_string(id) + " out of range");
      }
    }
  }
  index_sentence_positions(ex, layout);
  return ex;
}

Shard Shard::load(const std::filesystem::path& path) {
  ShardReader reader(path);
  Shard shard;
  shard.header = reader.header();
  while (auto ex = reader.next()) shard.examples.push_back(std::move(*ex));
  return shard;
}

void Shard::save(const std::filesystem::path& path) const {
  ShardWriter writer(path, header);
  for (const auto& ex : examples) writer.write(ex);
  writer.close();
}

}  // namespace depth
