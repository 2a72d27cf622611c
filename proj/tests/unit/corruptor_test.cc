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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "depth/errors.h"
#include "toy_corpus.h"

namespace depth {
namespace {

const VocabLayout kLayout{};  // 256 byte units, k = 20

TokenizedExample make_example(std::vector<std::vector<TokenId>> bodies,
                              std::uint64_t doc_id = 0) {
  TokenizedExample ex;
  ex.doc_id = doc_id;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    ex.sentences.push_back({kLayout.sentence(static_cast<std::uint32_t>(i % 20) + 1),
                            std::move(bodies[i])});
  }
  return ex;
}

// Random documents with distinct, random-length bodies.
TokenizedExample random_example(Rng& rng, std::uint64_t doc_id, std::size_t max_m,
                                std::size_t max_body) {
  const std::size_t m = 1 + rng.below(max_m);
  std::vector<std::vector<TokenId>> bodies(m);
  for (auto& b : bodies) {
    b.resize(1 + rng.below(max_body));
    for (auto& t : b) t = static_cast<TokenId>(rng.below(256));
  }
  auto ex = make_example(std::move(bodies), doc_id);
  std::vector<std::uint32_t> ids(20);
  std::iota(ids.begin(), ids.end(), 1u);
  for (std::size_t i = 0; i < m; ++i) {
    std::swap(ids[i], ids[i + rng.below(20 - i)]);
    ex.sentences[i].sent_id = kLayout.sentence(ids[i]);
  }
  return ex;
}

TEST(CorruptionConfig, Validation) {
  CorruptionConfig c;
  EXPECT_NO_THROW(c.validate());
  c.p = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.lambda = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.max_len = 8;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_objective("t5"), Objective::kT5);
  EXPECT_THROW(parse_objective("bart"), ConfigError);
}

TEST(SampleSpans, ZeroRateGivesNoSpans) {
  CorruptionConfig cfg;
  cfg.p = 0.0;
  Rng rng(1);
  EXPECT_TRUE(sample_spans(make_example({{1, 2, 3, 4, 5}}), cfg, rng).empty());
}

TEST(SampleSpans, MedianMaskedCountOnTenTokens) {
  CorruptionConfig cfg;
  const auto ex = make_example({{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}});
  std::vector<std::uint32_t> counts;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    std::uint32_t total = 0;
    for (const auto& s : sample_spans(ex, cfg, rng)) total += s.length;
    counts.push_back(total);
  }
  std::nth_element(counts.begin(), counts.begin() + 500, counts.end());
  EXPECT_EQ(counts[500], 3u);
}

TEST(SampleSpans, StructuralInvariants) {
  CorruptionConfig cfg;
  Rng gen(5);
  for (std::uint64_t d = 0; d < 2000; ++d) {
    const auto ex = random_example(gen, d, 8, 30);
    Rng rng(d);
    const auto spans = sample_spans(ex, cfg, rng);
    std::set<std::uint32_t> zs;
    std::map<std::uint32_t, std::vector<bool>> used;
    std::uint32_t total = 0;
    for (const auto& s : spans) {
      ASSERT_LT(s.sentence_index, ex.m());
      const auto& body = ex.sentences[s.sentence_index].body;
      ASSERT_GE(s.length, 1u);
      ASSERT_LE(s.length, cfg.max_span);
      ASSERT_LE(s.start + s.length, body.size());
      auto& mark = used[s.sentence_index];
      mark.resize(body.size());
      for (std::uint32_t i = s.start; i < s.start + s.length; ++i) {
        ASSERT_FALSE(mark[i]) << "overlap in doc " << d;
        mark[i] = true;
      }
      ASSERT_LT(s.sentinel_z, 100u);
      ASSERT_TRUE(zs.insert(s.sentinel_z).second) << "duplicate sentinel in doc " << d;
      total += s.length;
    }
    const auto budget = std::llround(0.3 * static_cast<double>(ex.body_token_count()));
    EXPECT_LE(total, budget);
  }
}

TEST(SampleSpans, T5SentinelsCountDownByPosition) {
  CorruptionConfig cfg;
  cfg.objective = Objective::kT5;
  Rng gen(8);
  for (std::uint64_t d = 0; d < 200; ++d) {
    const auto ex = random_example(gen, d, 6, 40);
    Rng rng(d);
    const auto spans = sample_spans(ex, cfg, rng);
    for (std::size_t i = 0; i < spans.size(); ++i) {
      EXPECT_EQ(spans[i].sentinel_z, 99 - i);
      EXPECT_EQ(spans[i].sentence_index, 0u);
      if (i > 0) {
        EXPECT_GE(spans[i].start, spans[i - 1].start + spans[i - 1].length);
      }
    }
  }
}

TEST(Permute, IdentityWhenNotShuffled) {
  Rng rng(1);
  EXPECT_EQ(permute(4, false, rng), (std::vector<std::uint32_t>{0, 1, 2, 3}));
  EXPECT_EQ(permute(1, true, rng), (std::vector<std::uint32_t>{0}));
}

TEST(Permute, AllSixOrderingsEquallyLikely) {
  // Multinomial(6000, 1/6): mean 1000, sd sqrt(6000 * 1/6 * 5/6) = 28.87.
  Rng rng(99);
  std::map<std::vector<std::uint32_t>, int> counts;
  for (int i = 0; i < 6000; ++i) ++counts[permute(3, true, rng)];
  ASSERT_EQ(counts.size(), 6u);
  const double sigma = std::sqrt(6000.0 / 6.0 * 5.0 / 6.0);
  for (const auto& [perm, c] : counts) EXPECT_NEAR(c, 1000.0, 3 * sigma);
}

TEST(DecideShuffle, PureAndBalanced) {
  CorruptionConfig cfg;
  cfg.global_seed = 4;
  int shuffled = 0;
  for (std::uint64_t b = 0; b < 10000; ++b) {
    const bool s = decide_shuffle(b, cfg);
    EXPECT_EQ(s, decide_shuffle(b, cfg));
    shuffled += s;
  }
  EXPECT_NEAR(shuffled, 5000, 150);
  cfg.shuffle_prob = 0.0;
  for (std::uint64_t b = 0; b < 100; ++b) EXPECT_FALSE(decide_shuffle(b, cfg));
}

TEST(BuildDepthExample, SwappedTwoSentenceExample) {
  // "A b. C d." with SENT ids 5 and 9, "b" -> sentinel 42, "d" -> sentinel 7.
  const TokenId A = 'A', b = 'b', C = 'C', d = 'd', dot = '.';
  TokenizedExample ex;
  ex.sentences = {{kLayout.sentence(5), {A, b, dot}}, {kLayout.sentence(9), {C, d, dot}}};
  const std::vector<SpanRecord> spans = {{0, 1, 1, 42}, {1, 1, 1, 7}};
  const std::vector<std::uint32_t> perm = {1, 0};
  const auto out = build_depth_example(ex, spans, perm, kLayout);

  const TokenId s5 = kLayout.sentence(5), s9 = kLayout.sentence(9);
  const TokenId x42 = kLayout.sentinel(42), x7 = kLayout.sentinel(7);
  const TokenId e = kLayout.eosen(), eos = kLayout.eos(), bos = kLayout.bos();
  EXPECT_EQ(out.encoder_ids, (std::vector<TokenId>{s9, C, x7, dot, e, s5, A, x42, dot, e, eos}));
  EXPECT_EQ(out.target_ids, (std::vector<TokenId>{s5, x42, b, e, s9, x7, d, e, eos}));
  EXPECT_EQ(out.decoder_input_ids, (std::vector<TokenId>{bos, s5, x42, b, e, s9, x7, d, e}));
  EXPECT_TRUE(out.shuffled);
  EXPECT_EQ(out.sentence_positions_enc, (std::vector<std::uint32_t>{0, 5}));
  EXPECT_EQ(out.sentence_positions_dec, (std::vector<std::uint32_t>{0, 4}));
  EXPECT_EQ(out.masked_tokens, 2u);
  EXPECT_EQ(uncorrupt(out, kLayout), (std::vector<TokenId>{A, b, dot, C, d, dot}));
}

TEST(BuildDepthExample, NoSpansNoShuffle) {
  const auto ex = make_example({{1, 2}, {3}});
  const std::vector<std::uint32_t> perm = {0, 1};
  const auto out = build_depth_example(ex, {}, perm, kLayout);
  const TokenId s1 = kLayout.sentence(1), s2 = kLayout.sentence(2), e = kLayout.eosen();
  EXPECT_EQ(out.encoder_ids, (std::vector<TokenId>{s1, 1, 2, e, s2, 3, e, kLayout.eos()}));
  EXPECT_EQ(out.target_ids, (std::vector<TokenId>{s1, e, s2, e, kLayout.eos()}));
  EXPECT_FALSE(out.shuffled);
}

TEST(BuildT5Example, SingleSpanOfThree) {
  // "A b c d e f g h i j", span of 3 at offset 3.
  std::vector<TokenId> body;
  for (char c : std::string("Abcdefghij")) body.push_back(static_cast<TokenId>(c));
  TokenizedExample ex;
  ex.sentences = {{kLayout.sentence(1), body}};
  const std::vector<SpanRecord> spans = {{0, 3, 3, 99}};
  const auto out = build_t5_example(ex, spans, kLayout);
  const TokenId x99 = kLayout.sentinel(99), eos = kLayout.eos();
  EXPECT_EQ(out.encoder_ids,
            (std::vector<TokenId>{'A', 'b', 'c', x99, 'g', 'h', 'i', 'j', eos}));
  EXPECT_EQ(out.target_ids, (std::vector<TokenId>{x99, 'd', 'e', 'f', eos}));
  EXPECT_EQ(out.decoder_input_ids, (std::vector<TokenId>{kLayout.bos(), x99, 'd', 'e', 'f'}));
}

TEST(BuildT5Example, ZeroRate) {
  CorruptionConfig cfg;
  cfg.objective = Objective::kT5;
  cfg.p = 0.0;
  const auto ex = make_example({{1, 2}, {3}});
  const auto out = corrupt_example(ex, 0, kLayout, cfg);
  ASSERT_TRUE(out);
  EXPECT_EQ(out->encoder_ids, (std::vector<TokenId>{1, 2, 3, kLayout.eos()}));
  EXPECT_EQ(out->target_ids, (std::vector<TokenId>{kLayout.eos()}));
  for (TokenId t : out->encoder_ids) EXPECT_FALSE(kLayout.in_sentence_set(t));
}

// Checks every structural contract on one corrupted example.
void check_example(const TokenizedExample& ex, const CorruptedExample& out,
                   const CorruptionConfig& cfg) {
  ASSERT_EQ(out.decoder_input_ids.size(), out.target_ids.size());
  ASSERT_EQ(out.encoder_ids.back(), kLayout.eos());
  ASSERT_EQ(out.target_ids.back(), kLayout.eos());
  ASSERT_LE(out.encoder_ids.size(), cfg.max_len);
  ASSERT_EQ(out.decoder_input_ids[0], kLayout.bos());

  std::map<TokenId, int> enc_sentinels, tgt_sentinels;
  std::multiset<TokenId> enc_sent, tgt_sent;
  std::vector<TokenId> tgt_sent_order;
  for (TokenId t : out.encoder_ids) {
    if (kLayout.is_sentinel(t)) ++enc_sentinels[t];
    if (kLayout.is_sentence(t)) enc_sent.insert(t);
  }
  for (TokenId t : out.target_ids) {
    if (kLayout.is_sentinel(t)) ++tgt_sentinels[t];
    if (kLayout.is_sentence(t)) {
      tgt_sent.insert(t);
      tgt_sent_order.push_back(t);
    }
  }
  ASSERT_EQ(enc_sentinels, tgt_sentinels);
  for (const auto& [id, c] : enc_sentinels) ASSERT_EQ(c, 1);
  ASSERT_EQ(enc_sent, tgt_sent);

  if (cfg.objective == Objective::kDepth) {
    ASSERT_TRUE(is_well_framed(out.encoder_ids, kLayout));
    // Target sentence ids follow document order.
    const auto fitted = fit_to_length(ex, cfg);
    ASSERT_TRUE(fitted);
    std::vector<TokenId> original;
    for (const auto& s : fitted->sentences) original.push_back(s.sent_id);
    ASSERT_EQ(tgt_sent_order, original);
  }

  // Token conservation and round trip.
  std::multiset<TokenId> original_tokens, recovered;
  const auto fitted = fit_to_length(ex, cfg);
  std::vector<TokenId> flat;
  for (const auto& s : fitted->sentences) flat.insert(flat.end(), s.body.begin(), s.body.end());
  original_tokens.insert(flat.begin(), flat.end());
  for (TokenId t : out.encoder_ids) {
    if (kLayout.is_subword(t)) recovered.insert(t);
  }
  for (TokenId t : out.target_ids) {
    if (kLayout.is_subword(t)) recovered.insert(t);
  }
  ASSERT_EQ(original_tokens, recovered);
  ASSERT_EQ(uncorrupt(out, kLayout), flat);
}

TEST(CorruptExample, PropertiesHoldOnRandomDocuments) {
  Rng gen(21);
  for (Objective obj : {Objective::kDepth, Objective::kT5}) {
    CorruptionConfig cfg;
    cfg.objective = obj;
    cfg.global_seed = 3;
    cfg.max_len = 64;
    for (std::uint64_t d = 0; d < 1500; ++d) {
      const auto ex = random_example(gen, d, 10, 20);
      const auto out = corrupt_example(ex, d / 16, kLayout, cfg);
      if (!out) {
        ASSERT_EQ(obj, Objective::kDepth);
        ASSERT_GT(ex.sentences[0].body.size() + 3, cfg.max_len);
        continue;
      }
      SCOPED_TRACE("doc " + std::to_string(d));
      check_example(ex, *out, cfg);
      if (::testing::Test::HasFatalFailure()) return;
    }
  }
}

TEST(CorruptExample, DeterministicInSeedDocAndBatch) {
  Rng gen(2);
  const auto ex = random_example(gen, 17, 6, 20);
  CorruptionConfig cfg;
  cfg.global_seed = 10;
  const auto a = corrupt_example(ex, 4, kLayout, cfg);
  const auto b = corrupt_example(ex, 4, kLayout, cfg);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(*a, *b);
  cfg.global_seed = 11;
  const auto c = corrupt_example(ex, 4, kLayout, cfg);
  EXPECT_FALSE(*a == *c);
}

TEST(CorruptExample, ShuffleFlagSharedWithinBatch) {
  CorruptionConfig cfg;
  cfg.global_seed = 6;
  Rng gen(4);
  for (std::uint64_t batch = 0; batch < 20; ++batch) {
    const bool expected = decide_shuffle(batch, cfg);
    for (std::uint64_t d = 0; d < 8; ++d) {
      const auto out = corrupt_example(random_example(gen, batch * 8 + d, 5, 10), batch,
                                       kLayout, cfg);
      ASSERT_TRUE(out);
      EXPECT_EQ(out->shuffled, expected);
    }
  }
}

TEST(FitToLength, TruncatesAndReinstatesEos) {
  CorruptionConfig cfg;
  cfg.max_len = 16;
  cfg.p = 0.0;
  cfg.shuffle_prob = 0.0;
  std::vector<TokenId> long_body(10, 'x');
  const auto ex = make_example({{1, 2, 3}, long_body, {4}});
  const auto out = corrupt_example(ex, 0, kLayout, cfg);
  ASSERT_TRUE(out);
  EXPECT_EQ(out->encoder_ids.size(), 16u);
  EXPECT_EQ(out->encoder_ids.back(), kLayout.eos());
  EXPECT_TRUE(is_well_framed(out->encoder_ids, kLayout));
  EXPECT_EQ(out->m(), 2u);
}

TEST(FitToLength, DropsWhenFirstSentenceCannotFit) {
  CorruptionConfig cfg;
  cfg.max_len = 16;
  const auto ex = make_example({std::vector<TokenId>(20, 'x')});
  EXPECT_FALSE(corrupt_example(ex, 0, kLayout, cfg).has_value());
  cfg.objective = Objective::kT5;
  const auto t5 = corrupt_example(ex, 0, kLayout, cfg);
  ASSERT_TRUE(t5.has_value());
  EXPECT_LE(t5->encoder_ids.size(), 16u);
}

TEST(Describe, NamesTokens) {
  const Vocab vocab = testing::toy_vocab(testing::random_documents(50, 1, 1, 3), 300);
  TokenizedExample ex;
  ex.sentences = {{vocab.layout().sentence(5), vocab.encode("Hi.")}};
  const std::vector<std::uint32_t> perm = {0};
  const auto text = describe(build_depth_example(ex, {}, perm, vocab.layout()), vocab);
  EXPECT_NE(text.find("<SENT_5>"), std::string::npos) << text;
  EXPECT_NE(text.find("<EOSEN>"), std::string::npos) << text;
}

}  // namespace
}  // namespace depth
