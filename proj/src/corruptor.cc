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

#include "depth/corruptor.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "depth/errors.h"

namespace depth {
namespace {

constexpr std::size_t kMaxSpans = kNumSentinels;

std::uint64_t example_seed(const CorruptionConfig& cfg, Stream stream,
                           std::uint64_t doc_id, std::uint64_t batch_index) {
  return derive_seed({cfg.global_seed, static_cast<std::uint64_t>(stream),
                      doc_id, batch_index});
}

void push_range(std::vector<TokenId>& out, const std::vector<TokenId>& src,
                std::size_t begin, std::size_t end) {
  out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(begin),
             src.begin() + static_cast<std::ptrdiff_t>(end));
}

void finish_decoder_side(CorruptedExample& out, const VocabLayout& layout) {
  out.decoder_input_ids.clear();
  out.decoder_input_ids.reserve(out.target_ids.size());
  out.decoder_input_ids.push_back(layout.bos());
  out.decoder_input_ids.insert(out.decoder_input_ids.end(),
                               out.target_ids.begin(), out.target_ids.end() - 1);
}

}  // namespace

Objective parse_objective(const std::string& name) {
  if (name == "depth" || name == "DEPTH") return Objective::kDepth;
  if (name == "t5" || name == "T5") return Objective::kT5;
  throw ConfigError("unknown objective '" + name + "' (expected depth or t5)");
}

std::string to_string(Objective objective) {
  return objective == Objective::kDepth ? "depth" : "t5";
}

void CorruptionConfig::validate() const {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("p must lie in [0, 1)");
  if (!(lambda >= 1.0)) throw ConfigError("lambda must be >= 1");
  if (max_span < 1) throw ConfigError("max_span must be >= 1");
  if (!(shuffle_prob >= 0.0 && shuffle_prob <= 1.0))
    throw ConfigError("shuffle_prob must lie in [0, 1]");
  if (max_len < 16) throw ConfigError("max_len must be >= 16");
}

std::optional<TokenizedExample> fit_to_length(const TokenizedExample& ex,
                                              const CorruptionConfig& cfg) {
  const bool framed = cfg.objective == Objective::kDepth;
  const std::size_t frame = framed ? 2 : 0;
  const std::size_t limit = cfg.max_len - 1;  // room for <EOS>
  TokenizedExample out;
  out.doc_id = ex.doc_id;
  std::size_t used = 0;
  for (const auto& sentence : ex.sentences) {
    const std::size_t need = sentence.body.size() + frame;
    if (used + need <= limit) {
      out.sentences.push_back(sentence);
      used += need;
      continue;
    }
    if (framed && out.sentences.empty()) return std::nullopt;
    if (used + frame < limit) {
      TokenizedSentence cut{sentence.sent_id, {}};
      push_range(cut.body, sentence.body, 0, limit - used - frame);
      out.sentences.push_back(std::move(cut));
    }
    break;
  }
  if (out.sentences.empty()) return std::nullopt;
  return out;
}

std::vector<SpanRecord> sample_spans(const TokenizedExample& ex,
                                     const CorruptionConfig& cfg, Rng& rng) {
  const bool per_sentence = cfg.objective == Objective::kDepth;
  // Segment boundaries in the flat body index space.
  std::vector<std::size_t> seg_begin;
  std::size_t n = 0;
  for (const auto& s : ex.sentences) {
    seg_begin.push_back(n);
    n += s.body.size();
  }
  const auto budget = static_cast<std::size_t>(std::llround(cfg.p * static_cast<double>(n)));
  if (budget == 0) return {};

  std::vector<bool> masked(n, false);
  std::vector<std::uint32_t> unmasked(n);
  std::iota(unmasked.begin(), unmasked.end(), 0u);

  struct Accepted {
    std::size_t flat_start;
    std::size_t length;
    std::size_t segment;
  };
  std::vector<Accepted> accepted;
  std::size_t total = 0;
  const std::size_t max_attempts = 10 * budget;
  for (std::size_t attempt = 0;
       attempt < max_attempts && total < budget && accepted.size() < kMaxSpans;
       ++attempt) {
    const std::size_t start = unmasked[rng.below(unmasked.size())];
    std::size_t length = rng.geometric(cfg.lambda);
    length = std::min<std::size_t>({length, cfg.max_span, budget - total});

    std::size_t segment = 0;
    std::size_t segment_end = n;
    if (per_sentence) {
      segment = static_cast<std::size_t>(
          std::upper_bound(seg_begin.begin(), seg_begin.end(), start) -
          seg_begin.begin() - 1);
      segment_end = segment + 1 < seg_begin.size() ? seg_begin[segment + 1] : n;
    }
    if (start + length > segment_end) continue;
    bool overlaps = false;
    for (std::size_t i = start; i < start + length; ++i) {
      if (masked[i]) {
        overlaps = true;
        break;
      }
    }
    if (overlaps) continue;

    for (std::size_t i = start; i < start + length; ++i) masked[i] = true;
    std::erase_if(unmasked, [&](std::uint32_t pos) {
      return pos >= start && pos < start + length;
    });
    accepted.push_back({start, length, segment});
    total += length;
  }

  std::vector<SpanRecord> spans;
  spans.reserve(accepted.size());
  if (per_sentence) {
    // Sentinel ids drawn without replacement, in acceptance order.
    std::vector<std::uint32_t> pool(kNumSentinels);
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::size_t i = 0; i < accepted.size(); ++i) {
      const std::size_t j = i + rng.below(kNumSentinels - i);
      std::swap(pool[i], pool[j]);
      const auto& a = accepted[i];
      spans.push_back({static_cast<std::uint32_t>(a.segment),
                       static_cast<std::uint32_t>(a.flat_start - seg_begin[a.segment]),
                       static_cast<std::uint32_t>(a.length), pool[i]});
    }
    std::sort(spans.begin(), spans.end(), [](const SpanRecord& a, const SpanRecord& b) {
      return std::tie(a.sentence_index, a.start) < std::tie(b.sentence_index, b.start);
    });
  } else {
    std::sort(accepted.begin(), accepted.end(),
              [](const Accepted& a, const Accepted& b) { return a.flat_start < b.flat_start; });
    for (std::size_t i = 0; i < accepted.size(); ++i) {
      spans.push_back({0, static_cast<std::uint32_t>(accepted[i].flat_start),
                       static_cast<std::uint32_t>(accepted[i].length),
                       static_cast<std::uint32_t>(kNumSentinels - 1 - i)});
    }
  }
  return spans;
}

bool decide_shuffle(std::uint64_t batch_index, const CorruptionConfig& cfg) {
  Rng rng(derive_seed({cfg.global_seed,
                       static_cast<std::uint64_t>(Stream::kShuffleDecision),
                       batch_index}));
  return rng.bernoulli(cfg.shuffle_prob);
}

std::vector<std::uint32_t> permute(std::size_t m, bool shuffled, Rng& rng) {
  std::vector<std::uint32_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0u);
  if (shuffled) {
    for (std::size_t i = m; i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.below(i)]);
    }
  }
  return perm;
}

CorruptedExample build_depth_example(const TokenizedExample& ex,
                                     std::span<const SpanRecord> spans,
                                     std::span<const std::uint32_t> permutation,
                                     const VocabLayout& layout) {
  const std::size_t m = ex.m();
  if (permutation.size() != m) {
    throw std::invalid_argument("permutation size does not match sentence count");
  }
  std::vector<std::vector<SpanRecord>> by_sentence(m);
  for (const auto& span : spans) {
    if (span.sentence_index >= m ||
        span.start + span.length > ex.sentences[span.sentence_index].body.size()) {
      throw std::invalid_argument("span outside its sentence body");
    }
    by_sentence[span.sentence_index].push_back(span);
  }
  for (auto& list : by_sentence) {
    std::sort(list.begin(), list.end(), [](const SpanRecord& a, const SpanRecord& b) {
      return a.start < b.start;
    });
  }
  std::vector<std::uint32_t> order(m);  // encoder position -> original index
  for (std::size_t i = 0; i < m; ++i) order[permutation[i]] = static_cast<std::uint32_t>(i);

  CorruptedExample out;
  out.doc_id = ex.doc_id;
  out.objective = Objective::kDepth;
  out.permutation.assign(permutation.begin(), permutation.end());
  out.shuffled = !std::is_sorted(permutation.begin(), permutation.end());
  out.spans.assign(spans.begin(), spans.end());
  std::sort(out.spans.begin(), out.spans.end(), [](const SpanRecord& a, const SpanRecord& b) {
    return std::tie(a.sentence_index, a.start) < std::tie(b.sentence_index, b.start);
  });
  out.body_tokens = static_cast<std::uint32_t>(ex.body_token_count());

  for (std::size_t pos = 0; pos < m; ++pos) {
    const std::size_t s = order[pos];
    const auto& sentence = ex.sentences[s];
    out.sentence_positions_enc.push_back(static_cast<std::uint32_t>(out.encoder_ids.size()));
    out.encoder_ids.push_back(sentence.sent_id);
    std::size_t cursor = 0;
    for (const auto& span : by_sentence[s]) {
      push_range(out.encoder_ids, sentence.body, cursor, span.start);
      out.encoder_ids.push_back(layout.sentinel(span.sentinel_z));
      cursor = span.start + span.length;
    }
    push_range(out.encoder_ids, sentence.body, cursor, sentence.body.size());
    out.encoder_ids.push_back(layout.eosen());
  }
  out.encoder_ids.push_back(layout.eos());

  for (std::size_t s = 0; s < m; ++s) {
    const auto& sentence = ex.sentences[s];
    out.sentence_positions_dec.push_back(static_cast<std::uint32_t>(out.target_ids.size()));
    out.target_ids.push_back(sentence.sent_id);
    for (const auto& span : by_sentence[s]) {
      out.target_ids.push_back(layout.sentinel(span.sentinel_z));
      push_range(out.target_ids, sentence.body, span.start, span.start + span.length);
      out.masked_tokens += span.length;
    }
    out.target_ids.push_back(layout.eosen());
  }
  out.target_ids.push_back(layout.eos());
  finish_decoder_side(out, layout);
  return out;
}

CorruptedExample build_t5_example(const TokenizedExample& ex,
                                  std::span<const SpanRecord> spans,
                                  const VocabLayout& layout) {
  std::vector<TokenId> flat;
  for (const auto& s : ex.sentences) flat.insert(flat.end(), s.body.begin(), s.body.end());

  CorruptedExample out;
  out.doc_id = ex.doc_id;
  out.objective = Objective::kT5;
  out.shuffled = false;
  out.spans.assign(spans.begin(), spans.end());
  std::sort(out.spans.begin(), out.spans.end(),
            [](const SpanRecord& a, const SpanRecord& b) { return a.start < b.start; });
  out.permutation.resize(ex.m());
  std::iota(out.permutation.begin(), out.permutation.end(), 0u);
  out.body_tokens = static_cast<std::uint32_t>(flat.size());

  std::size_t cursor = 0;
  for (const auto& span : out.spans) {
    if (span.start < cursor || span.start + span.length > flat.size()) {
      throw std::invalid_argument("T5 spans overlap or exceed the sequence");
    }
    push_range(out.encoder_ids, flat, cursor, span.start);
    out.encoder_ids.push_back(layout.sentinel(span.sentinel_z));
    cursor = span.start + span.length;

    out.target_ids.push_back(layout.sentinel(span.sentinel_z));
    push_range(out.target_ids, flat, span.start, span.start + span.length);
    out.masked_tokens += span.length;
  }
  push_range(out.encoder_ids, flat, cursor, flat.size());
  out.encoder_ids.push_back(layout.eos());
  out.target_ids.push_back(layout.eos());
  finish_decoder_side(out, layout);
  return out;
}

std::optional<CorruptedExample> corrupt_example(const TokenizedExample& ex,
                                                std::uint64_t batch_index,
                                                const VocabLayout& layout,
                                                const CorruptionConfig& cfg) {
  auto fitted = fit_to_length(ex, cfg);
  if (!fitted) return std::nullopt;

  Rng span_rng(example_seed(cfg, Stream::kSpans, ex.doc_id, batch_index));
  const auto spans = sample_spans(*fitted, cfg, span_rng);

  CorruptedExample out;
  if (cfg.objective == Objective::kDepth) {
    const bool shuffled = decide_shuffle(batch_index, cfg);
    Rng perm_rng(example_seed(cfg, Stream::kPermutation, ex.doc_id, batch_index));
    const auto perm = permute(fitted->m(), shuffled, perm_rng);
    out = build_depth_example(*fitted, spans, perm, layout);
    out.shuffled = shuffled;
  } else {
    out = build_t5_example(*fitted, spans, layout);
  }
  out.batch_index = batch_index;
  out.mask_budget = static_cast<std::uint32_t>(
      std::llround(cfg.p * static_cast<double>(out.body_tokens)));
  if (out.encoder_ids.size() > cfg.max_len) {
    throw std::logic_error("corrupted encoder exceeds max_len after fitting");
  }
  return out;
}

std::vector<TokenId> uncorrupt(const CorruptedExample& ex, const VocabLayout& layout) {
  // Sentinel -> span tokens, read from the target.
  std::map<TokenId, std::vector<TokenId>> fill;
  TokenId current = 0;
  bool in_span = false;
  for (const TokenId id : ex.target_ids) {
    if (layout.is_sentinel(id)) {
      current = id;
      fill[id];
      in_span = true;
    } else if (layout.is_subword(id) && in_span) {
      fill[current].push_back(id);
    } else {
      in_span = false;
    }
  }

  auto expand = [&](std::span<const TokenId> piece, std::vector<TokenId>& out) {
    for (const TokenId id : piece) {
      if (layout.is_sentinel(id)) {
        auto it = fill.find(id);
        if (it == fill.end()) throw DataError("sentinel missing from target");
        out.insert(out.end(), it->second.begin(), it->second.end());
      } else if (layout.is_subword(id)) {
        out.push_back(id);
      }
    }
  };

  std::vector<TokenId> original;
  if (ex.objective == Objective::kT5) {
    expand(ex.encoder_ids, original);
    return original;
  }
  // Split the encoder into framed sentences, then read them back through the
  // inverse permutation.
  std::vector<std::span<const TokenId>> encoder_sentences;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < ex.encoder_ids.size(); ++i) {
    if (ex.encoder_ids[i] == layout.eosen()) {
      encoder_sentences.emplace_back(ex.encoder_ids.data() + begin, i + 1 - begin);
      begin = i + 1;
    }
  }
  if (encoder_sentences.size() != ex.permutation.size()) {
    throw DataError("encoder sentence count does not match the permutation");
  }
  for (std::size_t s = 0; s < ex.permutation.size(); ++s) {
    expand(encoder_sentences[ex.permutation[s]], original);
  }
  return original;
}

std::string describe(const CorruptedExample& ex, const Vocab& vocab) {
  std::ostringstream out;
  auto line = [&](const char* label, const std::vector<TokenId>& ids) {
    out << "  " << label << " (" << ids.size() << "):";
    for (const TokenId id : ids) out << ' ' << vocab.token_name(id);
    out << '\n';
  };
  out << "doc " << ex.doc_id << " batch " << ex.batch_index << " objective "
      << to_string(ex.objective) << " shuffled " << (ex.shuffled ? "yes" : "no")
      << " masked " << ex.masked_tokens << '/' << ex.body_tokens << '\n';
  out << "  permutation:";
  for (const auto p : ex.permutation) out << ' ' << p;
  out << '\n';
  out << "  spans:";
  for (const auto& s : ex.spans) {
    out << " [s" << s.sentence_index << " @" << s.start << " len " << s.length
        << " z" << s.sentinel_z << ']';
  }
  out << '\n';
  line("encoder", ex.encoder_ids);
  line("decoder_input", ex.decoder_input_ids);
  line("target", ex.target_ids);
  return out.str();
}

}  // namespace depth
