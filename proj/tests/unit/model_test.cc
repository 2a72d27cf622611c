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
#include "depth/model.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "depth/errors.h"

namespace depth {
namespace {

using Mat = Matrix<double>;

const VocabLayout kLayout{};

// Reference forward pass written with plain loops over std::vector, sharing
// nothing with the Eigen implementation beyond the parameter values.
class ScalarOracle {
 public:
  using Grid = std::vector<std::vector<double>>;

  explicit ScalarOracle(const Transformer<double>& model)
      : cfg_(model.config()), names_(model.params().names) {
    for (const auto& t : model.params().tensors) tensors_.push_back(to_grid(t));
  }

  Grid logits(const std::vector<TokenId>& enc, const std::vector<TokenId>& dec,
              const AttentionMaskSet& masks) const {
    Grid x = embed(enc, "enc_pos");
    for (int l = 0; l < cfg_.enc_layers; ++l) {
      const std::string p = "enc." + std::to_string(l) + ".";
      add(x, attend(norm(x, p + "ln_attn"), norm(x, p + "ln_attn"), masks.enc_self, p + "attn"));
      add(x, ffn(norm(x, p + "ln_ffn"), p + "ffn"));
    }
    const Grid memory = norm(x, "enc_final");

    Grid y = embed(dec, "dec_pos");
    for (int l = 0; l < cfg_.dec_layers; ++l) {
      const std::string p = "dec." + std::to_string(l) + ".";
      add(y, attend(norm(y, p + "ln_self"), norm(y, p + "ln_self"), masks.dec_self,
                    p + "self_attn"));
      add(y, attend(norm(y, p + "ln_cross"), memory, masks.cross, p + "cross_attn"));
      add(y, ffn(norm(y, p + "ln_ffn"), p + "ffn"));
    }
    const Grid h = norm(y, "dec_final");
    const Grid& e = get("embedding");
    Grid out(h.size(), std::vector<double>(e.size(), 0.0));
    for (std::size_t i = 0; i < h.size(); ++i) {
      for (std::size_t v = 0; v < e.size(); ++v) {
        for (std::size_t c = 0; c < h[i].size(); ++c) out[i][v] += h[i][c] * e[v][c];
      }
    }
    return out;
  }

 private:
  static Grid to_grid(const Mat& m) {
    Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
    }
    return g;
  }

  const Grid& get(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return tensors_[i];
    }
    throw std::runtime_error("no tensor " + name);
  }

  static void add(Grid& x, const Grid& y) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t c = 0; c < x[i].size(); ++c) x[i][c] += y[i][c];
    }
  }

  static Grid matmul(const Grid& a, const Grid& b) {
    Grid out(a.size(), std::vector<double>(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t k = 0; k < b.size(); ++k) {
        for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
      }
    }
    return out;
  }

  Grid embed(const std::vector<TokenId>& ids, const std::string& pos_name) const {
    const Grid& e = get("embedding");
    const Grid& pos = get(pos_name);
    Grid x;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::vector<double> row(e[0].size());
      for (std::size_t c = 0; c < row.size(); ++c) row[c] = e[ids[i]][c] + pos[i][c];
      x.push_back(row);
    }
    return x;
  }

  Grid norm(const Grid& x, const std::string& p) const {
    const auto& gain = get(p + ".gain")[0];
    const auto& bias = get(p + ".bias")[0];
    Grid out = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double n = static_cast<double>(x[i].size());
      double mean = 0, var = 0;
      for (double v : x[i]) mean += v / n;
      for (double v : x[i]) var += (v - mean) * (v - mean) / n;
      for (std::size_t c = 0; c < x[i].size(); ++c) {
        out[i][c] = (x[i][c] - mean) / std::sqrt(var + 1e-6) * gain[c] + bias[c];
      }
    }
    return out;
  }

  Grid ffn(const Grid& x, const std::string& p) const {
    Grid hidden = matmul(x, get(p + ".w1"));
    const auto& b1 = get(p + ".b1")[0];
    for (auto& row : hidden) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        const double u = row[c] + b1[c];
        row[c] = 0.5 * u * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (u + 0.044715 * u * u * u)));
      }
    }
    Grid out = matmul(hidden, get(p + ".w2"));
    const auto& b2 = get(p + ".b2")[0];
    for (auto& row : out) {
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += b2[c];
    }
    return out;
  }

  Grid attend(const Grid& xq, const Grid& xkv, const BoolMatrix& mask,
              const std::string& p) const {
    const Grid q = matmul(xq, get(p + ".wq"));
    const Grid k = matmul(xkv, get(p + ".wk"));
    const Grid v = matmul(xkv, get(p + ".wv"));
    const std::size_t d = q[0].size();
    const std::size_t dh = d / static_cast<std::size_t>(cfg_.n_heads);
    Grid context(xq.size(), std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < static_cast<std::size_t>(cfg_.n_heads); ++h) {
      for (std::size_t i = 0; i < xq.size(); ++i) {
        std::vector<double> w(xkv.size(), 0.0);
        double total = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < xkv.size(); ++j) {
          if (!mask(i, j)) continue;
          double s = 0;
          for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) s += q[i][c] * k[j][c];
          w[j] = s / std::sqrt(static_cast<double>(dh));
          best = std::max(best, w[j]);
        }
        for (std::size_t j = 0; j < xkv.size(); ++j) {
          w[j] = mask(i, j) ? std::exp(w[j] - best) : 0.0;
          total += w[j];
        }
        if (total == 0) continue;
        for (std::size_t j = 0; j < xkv.size(); ++j) {
          for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
            context[i][c] += w[j] / total * v[j][c];
          }
        }
      }
    }
    return matmul(context, get(p + ".wo"));
  }

  ModelConfig cfg_;
  std::vector<std::string> names_;
  std::vector<Grid> tensors_;
};

ModelConfig tiny_config(int heads = 2) {
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = heads;
  cfg.enc_layers = 1;
  cfg.dec_layers = 1;
  cfg.d_ff = 12;
  cfg.vocab_size = static_cast<int>(kLayout.size());
  cfg.max_len = 32;
  cfg.init_seed = 3;
  return cfg;
}

// Fills every tensor, gains and biases included, with sizeable random values
// so that no term of the forward pass hides behind a trivial init.
void scramble(Transformer<double>& model, std::uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  for (auto& t : model.params().tensors) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = scale * rng.normal();
  }
}

BoolMatrix random_mask(std::size_t rows, std::size_t cols, Rng& rng) {
  BoolMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m.set(r, c, rng.bernoulli(0.6));
  }
  return m;
}

void expect_close(const Mat& actual, const ScalarOracle::Grid& expected, double tol) {
  ASSERT_EQ(static_cast<std::size_t>(actual.rows()), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    for (std::size_t j = 0; j < expected[i].size(); ++j) {
      ASSERT_NEAR(actual(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                  expected[i][j], tol)
          << "(" << i << ", " << j << ")";
    }
  }
}

TEST(ModelConfig, HeadDivisibility) {
  ModelConfig cfg = tiny_config();
  cfg.d_model = 100;
  cfg.n_heads = 3;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(Transformer<float>{cfg}, ConfigError);
  ModelConfig std_cfg;
  std_cfg.vocab_size = 10;
  EXPECT_EQ(std_cfg.head_dim(), 32);
  EXPECT_NO_THROW(std_cfg.validate());
}

TEST(Init, SameSeedSameParameters) {
  const Transformer<float> a(tiny_config()), b(tiny_config());
  ASSERT_EQ(a.params().size(), b.params().size());
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    EXPECT_EQ(a.params().tensors[i], b.params().tensors[i]) << a.params().names[i];
  }
  ModelConfig other = tiny_config();
  other.init_seed = 4;
  const Transformer<float> c(other);
  EXPECT_NE(a.params().tensors[a.slots().embedding], c.params().tensors[c.slots().embedding]);
}

TEST(Init, ScaledNormalWeightsUnitGains) {
  ModelConfig cfg = tiny_config();
  cfg.d_model = 64;
  cfg.d_ff = 128;
  const Transformer<double> m(cfg);
  const auto& P = m.params();
  double s = 0, s2 = 0, n = 0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const std::string& name = P.names[i];
    if (name.ends_with(".gain")) {
      EXPECT_TRUE((P.tensors[i].array() == 1.0).all()) << name;
    } else if (name.ends_with(".bias") || name.ends_with(".b1") || name.ends_with(".b2")) {
      EXPECT_TRUE((P.tensors[i].array() == 0.0).all()) << name;
      EXPECT_FALSE(P.decays[i]) << name;
    } else {
      EXPECT_TRUE(P.decays[i]) << name;
      s += P.tensors[i].sum();
      s2 += P.tensors[i].squaredNorm();
      n += static_cast<double>(P.tensors[i].size());
    }
  }
  EXPECT_NEAR(s / n, 0.0, 1e-3);
  EXPECT_NEAR(std::sqrt(s2 / n), 0.02, 5e-4);
  EXPECT_EQ(m.parameter_count(), P.scalar_count());
}

TEST(Forward, SingleHeadLengthTwoMatchesScalarOracle) {
  ModelConfig cfg = tiny_config(1);
  cfg.d_model = 4;
  cfg.d_ff = 6;
  Transformer<double> model(cfg);
  scramble(model, 17, 0.5);
  const std::vector<TokenId> enc = {'a', 'b'};
  const std::vector<TokenId> dec = {kLayout.bos(), 'c'};
  AttentionMaskSet masks{BoolMatrix(2, 2, true), BoolMatrix(2, 2, true), BoolMatrix(2, 2, true)};
  masks.dec_self.set(0, 1, false);
  expect_close(model.forward(enc, dec, masks), ScalarOracle(model).logits(enc, dec, masks),
               1e-10);
}

TEST(Forward, MatchesScalarOracleUnderArbitraryMasks) {
  ModelConfig cfg = tiny_config(2);
  cfg.enc_layers = 2;
  cfg.dec_layers = 2;
  Transformer<double> model(cfg);
  scramble(model, 5);
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<TokenId> enc(3 + rng.below(6)), dec(2 + rng.below(6));
    for (auto& t : enc) t = static_cast<TokenId>(rng.below(kLayout.size()));
    for (auto& t : dec) t = static_cast<TokenId>(rng.below(kLayout.size()));
    AttentionMaskSet masks{random_mask(enc.size(), enc.size(), rng),
                           random_mask(dec.size(), dec.size(), rng),
                           random_mask(dec.size(), enc.size(), rng)};
    // One fully blocked row exercises the zero-output rule.
    for (std::size_t c = 0; c < enc.size(); ++c) masks.cross.set(0, c, false);
    expect_close(model.forward(enc, dec, masks), ScalarOracle(model).logits(enc, dec, masks),
                 1e-10);
  }
}

TEST(MaskedSoftmax, RowsAreDistributionsOverAllowedCells) {
  Rng rng(2);
  Mat scores(6, 9);
  for (Eigen::Index i = 0; i < scores.size(); ++i) scores.data()[i] = 5 * rng.normal();
  BoolMatrix mask = random_mask(6, 9, rng);
  for (std::size_t c = 0; c < 9; ++c) mask.set(5, c, false);
  mask.set(0, 0, true);
  const Mat p = kernels::masked_softmax(scores, mask);
  for (Eigen::Index r = 0; r < 5; ++r) {
    if (mask.row_count(static_cast<std::size_t>(r)) == 0) continue;
    EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-12);
    for (Eigen::Index c = 0; c < 9; ++c) {
      if (!mask(r, c)) EXPECT_EQ(p(r, c), 0.0);
    }
  }
  EXPECT_TRUE((p.row(5).array() == 0.0).all());
}

TEST(MaskedSoftmax, ScoresAtBlockedCellsAreIrrelevant) {
  Rng rng(4);
  Mat scores(5, 7);
  for (Eigen::Index i = 0; i < scores.size(); ++i) scores.data()[i] = rng.normal();
  BoolMatrix mask = random_mask(5, 7, rng);
  for (std::size_t r = 0; r < 5; ++r) mask.set(r, r, true);
  const Mat before = kernels::masked_softmax(scores, mask);
  Mat flipped = scores;
  const double odd[] = {1e30, -1e30, std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::quiet_NaN(), 0.0};
  int n = 0;
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 7; ++c) {
      if (!mask(r, c)) flipped(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = odd[n++ % 5];
    }
  }
  EXPECT_EQ(kernels::masked_softmax(flipped, mask), before);
}

TEST(Forward, BlockedEncoderColumnContentIsIrrelevant) {
  // Column 2 is blocked for every encoder and cross row; its token should not
  // matter at all.
  Transformer<double> model(tiny_config());
  scramble(model, 6);
  std::vector<TokenId> enc = {'a', 'b', 'c', 'd', kLayout.eos()};
  const std::vector<TokenId> dec = {kLayout.bos(), 'x', 'y'};
  AttentionMaskSet masks{BoolMatrix(5, 5, true), build_decoder_mask(dec, kLayout),
                         BoolMatrix(3, 5, true)};
  for (std::size_t r = 0; r < 5; ++r) masks.enc_self.set(r, 2, false);
  for (std::size_t r = 0; r < 3; ++r) masks.cross.set(r, 2, false);
  const Mat before = model.forward(enc, dec, masks);
  enc[2] = 'z';
  EXPECT_EQ(model.forward(enc, dec, masks), before);
}

TEST(Forward, PadPositionsAreInert) {
  Transformer<double> model(tiny_config());
  scramble(model, 9);
  const TokenId pad = kLayout.pad();
  const std::vector<TokenId> enc = {kLayout.sentence(1), 'a', 'b', kLayout.eosen(),
                                    kLayout.eos(), pad, pad};
  const std::vector<TokenId> dec = {kLayout.bos(), kLayout.sentence(1), 'a', pad};
  const AttentionMaskSet masks = build_masks(enc, dec, kLayout);
  const Mat base = model.forward(enc, dec, masks);

  // Whatever sits in the pad slots, including swapping them for real tokens,
  // non-pad rows do not move.
  std::vector<TokenId> enc2 = enc, dec2 = dec;
  enc2[5] = 'q';
  enc2[6] = 'r';
  dec2[3] = 's';
  const Mat other = model.forward(enc2, dec2, masks);
  EXPECT_EQ(other.topRows(3), base.topRows(3));

  // Trimming the pads changes nothing either.
  const std::vector<TokenId> enc3(enc.begin(), enc.begin() + 5);
  const std::vector<TokenId> dec3(dec.begin(), dec.begin() + 3);
  const Mat trimmed = model.forward(enc3, dec3, build_masks(enc3, dec3, kLayout));
  EXPECT_LT((trimmed - base.topRows(3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, DecoderIsCausal) {
  ModelConfig cfg = tiny_config();
  cfg.dec_layers = 2;
  Transformer<double> model(cfg);
  scramble(model, 12);
  const std::vector<TokenId> enc = {'a', 'b', 'c', kLayout.eos()};
  std::vector<TokenId> dec = {kLayout.bos(), 'd', 'e', 'f', 'g', 'h'};
  const AttentionMaskSet masks = build_masks(enc, dec, kLayout);
  const Mat base = model.forward(enc, dec, masks);
  for (std::size_t j = 1; j < dec.size(); ++j) {
    std::vector<TokenId> changed = dec;
    changed[j] = 'Z';
    const Mat out = model.forward(enc, changed, masks);
    const auto rows = static_cast<Eigen::Index>(j);
    EXPECT_EQ(out.topRows(rows), base.topRows(rows)) << "perturbed position " << j;
    EXPECT_NE(out.row(rows), base.row(rows));
  }
}

TEST(Forward, SentenceStateSeesOnlyItsOwnSentenceInOneLayer) {
  ModelConfig cfg = tiny_config();
  cfg.enc_layers = 1;
  Transformer<double> model(cfg);
  scramble(model, 13);
  const TokenId s1 = kLayout.sentence(4), s2 = kLayout.sentence(9), e = kLayout.eosen();
  std::vector<TokenId> enc = {s1, 'a', 'b', e, s2, 'c', 'd', e, kLayout.eos()};
  const BoolMatrix mask = build_encoder_mask(enc, kLayout);
  const Mat base = model.encode(enc, mask);
  enc[1] = 'Q';  // body token of the first sentence
  const Mat out = model.encode(enc, mask);
  EXPECT_EQ(out.row(4), base.row(4));
  EXPECT_NE(out.row(0), base.row(0));
  EXPECT_NE(out.row(5), base.row(5));

  // Decoder <SENT> rows then depend on that sentence only through encoder
  // <SENT> states, which moved only at position 0.
  const std::vector<TokenId> dec = {kLayout.bos(), s2};
  const AttentionMaskSet masks = build_masks(enc, dec, kLayout);
  Mat hacked_enc = base;
  hacked_enc.row(0) = out.row(0);
  const Mat via_sent_state =
      model.decode(hacked_enc, dec, masks.dec_self, masks.cross);
  const Mat actual = model.decode(out, dec, masks.dec_self, masks.cross);
  EXPECT_EQ(actual.row(1), via_sent_state.row(1));
}

TEST(Forward, ShapeErrors) {
  Transformer<double> model(tiny_config());
  const std::vector<TokenId> enc = {'a', 'b'};
  const std::vector<TokenId> dec = {kLayout.bos()};
  AttentionMaskSet bad{BoolMatrix(3, 3, true), BoolMatrix(1, 1, true), BoolMatrix(1, 2, true)};
  EXPECT_THROW(model.forward(enc, dec, bad), std::invalid_argument);
  const std::vector<TokenId> long_enc(40, 'a');
  EXPECT_THROW(model.forward(long_enc, dec, build_masks(long_enc, dec, kLayout)),
               std::invalid_argument);
}

TEST(GreedyDecode, RespectsMaxOut) {
  Transformer<double> model(tiny_config());
  scramble(model, 1);
  const std::vector<TokenId> enc = {kLayout.sentence(1), 'a', kLayout.eosen(), kLayout.eos()};
  const auto mask = build_encoder_mask(enc, kLayout);
  EXPECT_EQ(model.greedy_decode(enc, mask, 1, kLayout).size(), 1u);
  const auto out = model.greedy_decode(enc, mask, 10, kLayout);
  EXPECT_GE(out.size(), 1u);
  EXPECT_LE(out.size(), 10u);
}

TEST(GreedyDecode, MatchesStepwiseForwardWithRebuiltMasks) {
  Transformer<double> model(tiny_config());
  scramble(model, 21, 0.6);
  const std::vector<TokenId> enc = {kLayout.sentence(2), 'a', kLayout.eosen(),
                                    kLayout.sentence(5), 'b', kLayout.eosen(), kLayout.eos()};
  const auto emitted = model.greedy_decode(enc, build_encoder_mask(enc, kLayout), 6, kLayout);
  std::vector<TokenId> prefix = {kLayout.bos()};
  for (std::size_t t = 0; t < emitted.size(); ++t) {
    const Mat logits = model.forward(enc, prefix, build_masks(enc, prefix, kLayout));
    Eigen::Index best = 0;
    logits.row(logits.rows() - 1).maxCoeff(&best);
    ASSERT_EQ(emitted[t], static_cast<TokenId>(best)) << "step " << t;
    prefix.push_back(emitted[t]);
  }
}

TEST(Cast, FloatAndDoubleAgree) {
  Transformer<float> f(tiny_config());
  const Transformer<double> d = f.cast<double>();
  const std::vector<TokenId> enc = {'a', 'b', kLayout.eos()};
  const std::vector<TokenId> dec = {kLayout.bos(), 'a'};
  const auto masks = build_masks(enc, dec, kLayout);
  const Mat diff = f.forward(enc, dec, masks).cast<double>() - d.forward(enc, dec, masks);
  EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-4);
}

TEST(ParameterSet, ConstructorRejectsWrongShapes) {
  const Transformer<float> m(tiny_config());
  ParameterSet<float> p = m.params();
  p.tensors[0] = Matrix<float>::Zero(2, 2);
  EXPECT_THROW((Transformer<float>(tiny_config(), p)), DataError);
  ParameterSet<float> q = m.params();
  q.names[1] = "bogus";
  EXPECT_THROW((Transformer<float>(tiny_config(), q)), DataError);
}

}  // namespace
}  // namespace depth
