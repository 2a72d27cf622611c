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

#include <cmath>
#include <limits>
#include <stdexcept>

#include "depth/errors.h"

namespace depth {
namespace {

constexpr double kLayerNormEps = 1e-6;
constexpr double kInitStd = 0.02;

template <typename T>
struct LayerNormTrace {
  Matrix<T> xhat;
  Vector<T> inv_std;
};

template <typename T>
struct AttentionTrace {
  Matrix<T> xq, xkv, q, k, v, context;
  std::vector<Matrix<T>> probs;
};

template <typename T>
struct FeedForwardTrace {
  Matrix<T> x, pre, act;
};

template <typename T>
struct EncoderLayerTrace {
  LayerNormTrace<T> ln_attn;
  AttentionTrace<T> attn;
  Matrix<T> drop_attn;
  LayerNormTrace<T> ln_ffn;
  FeedForwardTrace<T> ffn;
  Matrix<T> drop_ffn;
};

template <typename T>
struct DecoderLayerTrace {
  LayerNormTrace<T> ln_self;
  AttentionTrace<T> self_attn;
  Matrix<T> drop_self;
  LayerNormTrace<T> ln_cross;
  AttentionTrace<T> cross_attn;
  Matrix<T> drop_cross;
  LayerNormTrace<T> ln_ffn;
  FeedForwardTrace<T> ffn;
  Matrix<T> drop_ffn;
};

template <typename T>
struct StackTrace {
  Matrix<T> drop_embed;
  std::vector<EncoderLayerTrace<T>> enc;
  std::vector<DecoderLayerTrace<T>> dec;
  LayerNormTrace<T> final_norm;
};

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, const Matrix<T>& gain, const Matrix<T>& bias,
                     LayerNormTrace<T>* trace) {
  const T d = static_cast<T>(x.cols());
  const Vector<T> mean = x.rowwise().mean();
  Matrix<T> centered = x.colwise() - mean;
  const Vector<T> var = centered.array().square().rowwise().sum().matrix() / d;
  const Vector<T> inv = (var.array() + static_cast<T>(kLayerNormEps)).rsqrt().matrix();
  Matrix<T> xhat = (centered.array().colwise() * inv.array()).matrix();
  Matrix<T> y = ((xhat.array().rowwise() * gain.row(0).array()).rowwise() +
                 bias.row(0).array())
                    .matrix();
  if (trace) {
    trace->xhat = std::move(xhat);
    trace->inv_std = inv;
  }
  return y;
}

// Accumulates into dx, dgain, dbias.
template <typename T>
void layer_norm_backward(const Matrix<T>& dy, const Matrix<T>& gain,
                         const LayerNormTrace<T>& tr, Matrix<T>& dx, Matrix<T>& dgain,
                         Matrix<T>& dbias, BackwardFault fault) {
  dgain.row(0) += (dy.array() * tr.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  const Matrix<T> g = (dy.array().rowwise() * gain.row(0).array()).matrix();
  if (fault == BackwardFault::kLayerNormDropsMeanTerms) {
    dx += (g.array().colwise() * tr.inv_std.array()).matrix();
    return;
  }
  const Vector<T> mean_g = g.rowwise().mean();
  const Vector<T> mean_gx = (g.array() * tr.xhat.array()).rowwise().mean().matrix();
  dx += (((g.colwise() - mean_g).array() - tr.xhat.array().colwise() * mean_gx.array())
             .colwise() *
         tr.inv_std.array())
            .matrix();
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

// tanh-approximated GELU, elementwise.
template <typename T>
Matrix<T> gelu(const Matrix<T>& x) {
  const auto a = x.array();
  const auto t = (static_cast<T>(kGeluC) * (a + static_cast<T>(kGeluA) * a.cube())).tanh();
  return (static_cast<T>(0.5) * a * (static_cast<T>(1) + t)).matrix();
}

template <typename T>
Matrix<T> gelu_grad(const Matrix<T>& x) {
  const auto a = x.array();
  const auto t = (static_cast<T>(kGeluC) * (a + static_cast<T>(kGeluA) * a.cube())).tanh().eval();
  const auto inner = static_cast<T>(kGeluC) * (static_cast<T>(1) + static_cast<T>(3 * kGeluA) * a.square());
  return (static_cast<T>(0.5) * (static_cast<T>(1) + t) +
          static_cast<T>(0.5) * a * (static_cast<T>(1) - t.square()) * inner)
      .matrix();
}

template <typename T>
Matrix<T> feed_forward(const ParameterSet<T>& P, const FeedForwardSlots& s, const Matrix<T>& x,
                       FeedForwardTrace<T>* tr) {
  Matrix<T> pre = x * P.tensors[s.w1];
  pre.rowwise() += P.tensors[s.b1].row(0);
  Matrix<T> act = gelu(pre);
  Matrix<T> out = act * P.tensors[s.w2];
  out.rowwise() += P.tensors[s.b2].row(0);
  if (tr) {
    tr->x = x;
    tr->pre = std::move(pre);
    tr->act = std::move(act);
  }
  return out;
}

template <typename T>
void feed_forward_backward(const ParameterSet<T>& P, const FeedForwardSlots& s,
                           const FeedForwardTrace<T>& tr, const Matrix<T>& dout,
                           ParameterSet<T>& G, Matrix<T>& dx) {
  G.tensors[s.w2].noalias() += tr.act.transpose() * dout;
  G.tensors[s.b2].row(0) += dout.colwise().sum();
  Matrix<T> dpre = dout * P.tensors[s.w2].transpose();
  dpre.array() *= gelu_grad(tr.pre).array();
  G.tensors[s.w1].noalias() += tr.x.transpose() * dpre;
  G.tensors[s.b1].row(0) += dpre.colwise().sum();
  dx.noalias() += dpre * P.tensors[s.w1].transpose();
}

template <typename T>
Matrix<T> attention(const ParameterSet<T>& P, const AttentionSlots& s, const Matrix<T>& xq,
                    const Matrix<T>& xkv, const BoolMatrix& mask, int heads,
                    AttentionTrace<T>* tr) {
  if (mask.rows() != static_cast<std::size_t>(xq.rows()) ||
      mask.cols() != static_cast<std::size_t>(xkv.rows())) {
    throw std::invalid_argument("attention mask shape does not match the sequences");
  }
  const Eigen::Index d = xq.cols();
  const Eigen::Index dh = d / heads;
  const T scale = static_cast<T>(1) / std::sqrt(static_cast<T>(dh));
  Matrix<T> q = xq * P.tensors[s.wq];
  Matrix<T> k = xkv * P.tensors[s.wk];
  Matrix<T> v = xkv * P.tensors[s.wv];
  Matrix<T> context(xq.rows(), d);
  if (tr) tr->probs.clear();
  for (int h = 0; h < heads; ++h) {
    Matrix<T> scores = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose();
    scores *= scale;
    Matrix<T> probs = kernels::masked_softmax(scores, mask);
    context.middleCols(h * dh, dh).noalias() = probs * v.middleCols(h * dh, dh);
    if (tr) tr->probs.push_back(std::move(probs));
  }
  Matrix<T> out = context * P.tensors[s.wo];
  if (tr) {
    tr->xq = xq;
    tr->xkv = xkv;
    tr->q = std::move(q);
    tr->k = std::move(k);
    tr->v = std::move(v);
    tr->context = std::move(context);
  }
  return out;
}

// dxq and dxkv may alias (self-attention).
template <typename T>
void attention_backward(const ParameterSet<T>& P, const AttentionSlots& s,
                        const AttentionTrace<T>& tr, const Matrix<T>& dout, int heads,
                        ParameterSet<T>& G, Matrix<T>& dxq, Matrix<T>& dxkv) {
  const Eigen::Index d = tr.xq.cols();
  const Eigen::Index dh = d / heads;
  const T scale = static_cast<T>(1) / std::sqrt(static_cast<T>(dh));
  G.tensors[s.wo].noalias() += tr.context.transpose() * dout;
  const Matrix<T> dcontext = dout * P.tensors[s.wo].transpose();
  Matrix<T> dq(tr.q.rows(), d), dk(tr.k.rows(), d), dv(tr.v.rows(), d);
  for (int h = 0; h < heads; ++h) {
    const Matrix<T>& probs = tr.probs[h];
    const auto dctx_h = dcontext.middleCols(h * dh, dh);
    Matrix<T> dprobs = dctx_h * tr.v.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh).noalias() = probs.transpose() * dctx_h;
    const Vector<T> row_dot = (probs.array() * dprobs.array()).rowwise().sum().matrix();
    Matrix<T> dscores = (probs.array() * (dprobs.colwise() - row_dot).array()).matrix();
    dscores *= scale;
    dq.middleCols(h * dh, dh).noalias() = dscores * tr.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = dscores.transpose() * tr.q.middleCols(h * dh, dh);
  }
  G.tensors[s.wq].noalias() += tr.xq.transpose() * dq;
  G.tensors[s.wk].noalias() += tr.xkv.transpose() * dk;
  G.tensors[s.wv].noalias() += tr.xkv.transpose() * dv;
  dxq.noalias() += dq * P.tensors[s.wq].transpose();
  dxkv.noalias() += dk * P.tensors[s.wk].transpose();
  dxkv.noalias() += dv * P.tensors[s.wv].transpose();
}

template <typename T>
void dropout(Matrix<T>& x, Matrix<T>* mask, Rng* rng, double rate) {
  if (!rng || rate <= 0.0) {
    if (mask) mask->resize(0, 0);
    return;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Matrix<T> m(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = rng->uniform() < rate ? static_cast<T>(0) : keep_scale;
  }
  x.array() *= m.array();
  if (mask) *mask = std::move(m);
}

template <typename T>
void dropout_backward(Matrix<T>& grad, const Matrix<T>& mask) {
  if (mask.size() != 0) grad.array() *= mask.array();
}

template <typename T>
Matrix<T> embed(const ParameterSet<T>& P, std::size_t table, std::size_t positions,
                std::span<const TokenId> ids) {
  const Matrix<T>& E = P.tensors[table];
  const Matrix<T>& pos = P.tensors[positions];
  Matrix<T> x(static_cast<Eigen::Index>(ids.size()), E.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= static_cast<TokenId>(E.rows())) {
      throw std::invalid_argument("token id " + std::to_string(ids[i]) +
                                  " outside the model vocabulary");
    }
    x.row(static_cast<Eigen::Index>(i)) =
        E.row(ids[i]) + pos.row(static_cast<Eigen::Index>(i));
  }
  return x;
}

template <typename T>
void embed_backward(const Matrix<T>& dx, std::size_t table, std::size_t positions,
                    std::span<const TokenId> ids, ParameterSet<T>& G) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = dx.row(static_cast<Eigen::Index>(i));
    G.tensors[table].row(ids[i]) += row;
    G.tensors[positions].row(static_cast<Eigen::Index>(i)) += row;
  }
}

template <typename T>
Matrix<T> run_encoder(const ModelConfig& cfg, const ModelSlots& S, const ParameterSet<T>& P,
                      std::span<const TokenId> ids, const BoolMatrix& mask,
                      StackTrace<T>* tr, Rng* rng) {
  Matrix<T> x = embed(P, S.embedding, S.enc_pos, ids);
  dropout(x, tr ? &tr->drop_embed : nullptr, rng, cfg.dropout);
  if (tr) tr->enc.resize(S.enc.size());
  for (std::size_t l = 0; l < S.enc.size(); ++l) {
    const auto& L = S.enc[l];
    EncoderLayerTrace<T>* lt = tr ? &tr->enc[l] : nullptr;
    const Matrix<T> n1 = layer_norm(x, P.tensors[L.ln_attn.gain], P.tensors[L.ln_attn.bias],
                                    lt ? &lt->ln_attn : nullptr);
    Matrix<T> a = attention(P, L.attn, n1, n1, mask, cfg.n_heads, lt ? &lt->attn : nullptr);
    dropout(a, lt ? &lt->drop_attn : nullptr, rng, cfg.dropout);
    x += a;
    const Matrix<T> n2 = layer_norm(x, P.tensors[L.ln_ffn.gain], P.tensors[L.ln_ffn.bias],
                                    lt ? &lt->ln_ffn : nullptr);
    Matrix<T> f = feed_forward(P, L.ffn, n2, lt ? &lt->ffn : nullptr);
    dropout(f, lt ? &lt->drop_ffn : nullptr, rng, cfg.dropout);
    x += f;
  }
  return layer_norm(x, P.tensors[S.enc_final.gain], P.tensors[S.enc_final.bias],
                    tr ? &tr->final_norm : nullptr);
}

template <typename T>
Matrix<T> run_decoder(const ModelConfig& cfg, const ModelSlots& S, const ParameterSet<T>& P,
                      const Matrix<T>& enc_out, std::span<const TokenId> ids,
                      const BoolMatrix& dec_mask, const BoolMatrix& cross_mask,
                      StackTrace<T>* tr, Rng* rng) {
  Matrix<T> x = embed(P, S.embedding, S.dec_pos, ids);
  dropout(x, tr ? &tr->drop_embed : nullptr, rng, cfg.dropout);
  if (tr) tr->dec.resize(S.dec.size());
  for (std::size_t l = 0; l < S.dec.size(); ++l) {
    const auto& L = S.dec[l];
    DecoderLayerTrace<T>* lt = tr ? &tr->dec[l] : nullptr;
    const Matrix<T> n1 = layer_norm(x, P.tensors[L.ln_self.gain], P.tensors[L.ln_self.bias],
                                    lt ? &lt->ln_self : nullptr);
    Matrix<T> a = attention(P, L.self_attn, n1, n1, dec_mask, cfg.n_heads,
                            lt ? &lt->self_attn : nullptr);
    dropout(a, lt ? &lt->drop_self : nullptr, rng, cfg.dropout);
    x += a;
    const Matrix<T> n2 = layer_norm(x, P.tensors[L.ln_cross.gain], P.tensors[L.ln_cross.bias],
                                    lt ? &lt->ln_cross : nullptr);
    Matrix<T> c = attention(P, L.cross_attn, n2, enc_out, cross_mask, cfg.n_heads,
                            lt ? &lt->cross_attn : nullptr);
    dropout(c, lt ? &lt->drop_cross : nullptr, rng, cfg.dropout);
    x += c;
    const Matrix<T> n3 = layer_norm(x, P.tensors[L.ln_ffn.gain], P.tensors[L.ln_ffn.bias],
                                    lt ? &lt->ln_ffn : nullptr);
    Matrix<T> f = feed_forward(P, L.ffn, n3, lt ? &lt->ffn : nullptr);
    dropout(f, lt ? &lt->drop_ffn : nullptr, rng, cfg.dropout);
    x += f;
  }
  return layer_norm(x, P.tensors[S.dec_final.gain], P.tensors[S.dec_final.bias],
                    tr ? &tr->final_norm : nullptr);
}

// Returns d(encoder output) accumulated from all cross-attention blocks.
template <typename T>
Matrix<T> backprop_decoder(const ModelConfig& cfg, const ModelSlots& S, const ParameterSet<T>& P,
                           const StackTrace<T>& tr, std::span<const TokenId> ids,
                           const Matrix<T>& dout, Eigen::Index enc_len, ParameterSet<T>& G,
                           BackwardFault fault) {
  const Eigen::Index d = dout.cols();
  Matrix<T> denc = Matrix<T>::Zero(enc_len, d);
  Matrix<T> dx = Matrix<T>::Zero(dout.rows(), d);
  layer_norm_backward(dout, P.tensors[S.dec_final.gain], tr.final_norm, dx,
                      G.tensors[S.dec_final.gain], G.tensors[S.dec_final.bias], fault);
  for (std::size_t l = S.dec.size(); l-- > 0;) {
    const auto& L = S.dec[l];
    const auto& lt = tr.dec[l];

    Matrix<T> df = dx;
    dropout_backward(df, lt.drop_ffn);
    Matrix<T> dn = Matrix<T>::Zero(dx.rows(), d);
    feed_forward_backward(P, L.ffn, lt.ffn, df, G, dn);
    layer_norm_backward(dn, P.tensors[L.ln_ffn.gain], lt.ln_ffn, dx, G.tensors[L.ln_ffn.gain],
                        G.tensors[L.ln_ffn.bias], fault);

    Matrix<T> dc = dx;
    dropout_backward(dc, lt.drop_cross);
    dn.setZero();
    attention_backward(P, L.cross_attn, lt.cross_attn, dc, cfg.n_heads, G, dn, denc);
    layer_norm_backward(dn, P.tensors[L.ln_cross.gain], lt.ln_cross, dx,
                        G.tensors[L.ln_cross.gain], G.tensors[L.ln_cross.bias], fault);

    Matrix<T> da = dx;
    dropout_backward(da, lt.drop_self);
    dn.setZero();
    attention_backward(P, L.self_attn, lt.self_attn, da, cfg.n_heads, G, dn, dn);
    layer_norm_backward(dn, P.tensors[L.ln_self.gain], lt.ln_self, dx,
                        G.tensors[L.ln_self.gain], G.tensors[L.ln_self.bias], fault);
  }
  dropout_backward(dx, tr.drop_embed);
  embed_backward(dx, S.embedding, S.dec_pos, ids, G);
  return denc;
}

template <typename T>
void backprop_encoder(const ModelConfig& cfg, const ModelSlots& S, const ParameterSet<T>& P,
                      const StackTrace<T>& tr, std::span<const TokenId> ids,
                      const Matrix<T>& dout, ParameterSet<T>& G, BackwardFault fault) {
  const Eigen::Index d = dout.cols();
  Matrix<T> dx = Matrix<T>::Zero(dout.rows(), d);
  layer_norm_backward(dout, P.tensors[S.enc_final.gain], tr.final_norm, dx,
                      G.tensors[S.enc_final.gain], G.tensors[S.enc_final.bias], fault);
  for (std::size_t l = S.enc.size(); l-- > 0;) {
    const auto& L = S.enc[l];
    const auto& lt = tr.enc[l];

    Matrix<T> df = dx;
    dropout_backward(df, lt.drop_ffn);
    Matrix<T> dn = Matrix<T>::Zero(dx.rows(), d);
    feed_forward_backward(P, L.ffn, lt.ffn, df, G, dn);
    layer_norm_backward(dn, P.tensors[L.ln_ffn.gain], lt.ln_ffn, dx, G.tensors[L.ln_ffn.gain],
                        G.tensors[L.ln_ffn.bias], fault);

    Matrix<T> da = dx;
    dropout_backward(da, lt.drop_attn);
    dn.setZero();
    attention_backward(P, L.attn, lt.attn, da, cfg.n_heads, G, dn, dn);
    layer_norm_backward(dn, P.tensors[L.ln_attn.gain], lt.ln_attn, dx,
                        G.tensors[L.ln_attn.gain], G.tensors[L.ln_attn.bias], fault);
  }
  dropout_backward(dx, tr.drop_embed);
  embed_backward(dx, S.embedding, S.enc_pos, ids, G);
}

}  // namespace

namespace kernels {

template <typename T>
Matrix<T> masked_softmax(const Matrix<T>& scores, const BoolMatrix& mask) {
  Matrix<T> probs(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const std::uint8_t* allowed = mask.row(static_cast<std::size_t>(r));
    T max_score = -std::numeric_limits<T>::infinity();
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      if (allowed[c]) max_score = std::max(max_score, scores(r, c));
    }
    if (max_score == -std::numeric_limits<T>::infinity()) {
      probs.row(r).setZero();
      continue;
    }
    probs.row(r) = (scores.row(r).array() - max_score).exp().matrix();
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      if (!allowed[c]) probs(r, c) = 0;
    }
    const T total = probs.row(r).sum();
    probs.row(r) /= total;
  }
  return probs;
}

template Matrix<float> masked_softmax(const Matrix<float>&, const BoolMatrix&);
template Matrix<double> masked_softmax(const Matrix<double>&, const BoolMatrix&);

}  // namespace kernels

void ModelConfig::validate() const {
  if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0) {
    throw ConfigError("d_model (" + std::to_string(d_model) +
                      ") must be a positive multiple of n_heads (" + std::to_string(n_heads) + ")");
  }
  if (enc_layers < 0 || dec_layers < 0) throw ConfigError("layer counts must be >= 0");
  if (d_ff <= 0) throw ConfigError("d_ff must be positive");
  if (vocab_size <= 0) throw ConfigError("vocab_size must be positive");
  if (max_len <= 0) throw ConfigError("max_len must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

template <typename T>
std::size_t ParameterSet<T>::add(std::string name, Eigen::Index rows, Eigen::Index cols,
                                 bool decay) {
  names.push_back(std::move(name));
  tensors.push_back(Matrix<T>::Zero(rows, cols));
  decays.push_back(decay);
  return tensors.size() - 1;
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

template <typename T>
void ParameterSet<T>::set_zero() {
  for (auto& t : tensors) t.setZero();
}

template <typename T>
ParameterSet<T> ParameterSet<T>::zeros_like() const {
  ParameterSet<T> out;
  out.names = names;
  out.decays = decays;
  for (const auto& t : tensors) out.tensors.push_back(Matrix<T>::Zero(t.rows(), t.cols()));
  return out;
}

template <typename T>
bool ParameterSet<T>::all_finite() const {
  for (const auto& t : tensors) {
    if (!t.allFinite()) return false;
  }
  return true;
}

template <typename T>
ModelSlots Transformer<T>::build_slots(ParameterSet<T>& P) const {
  const Eigen::Index d = cfg_.d_model;
  const Eigen::Index ff = cfg_.d_ff;
  auto norm = [&](const std::string& prefix) {
    LayerNormSlots s;
    s.gain = P.add(prefix + ".gain", 1, d, false);
    s.bias = P.add(prefix + ".bias", 1, d, false);
    return s;
  };
  auto attn = [&](const std::string& prefix) {
    AttentionSlots s;
    s.wq = P.add(prefix + ".wq", d, d, true);
    s.wk = P.add(prefix + ".wk", d, d, true);
    s.wv = P.add(prefix + ".wv", d, d, true);
    s.wo = P.add(prefix + ".wo", d, d, true);
    return s;
  };
  auto ffn = [&](const std::string& prefix) {
    FeedForwardSlots s;
    s.w1 = P.add(prefix + ".w1", d, ff, true);
    s.b1 = P.add(prefix + ".b1", 1, ff, false);
    s.w2 = P.add(prefix + ".w2", ff, d, true);
    s.b2 = P.add(prefix + ".b2", 1, d, false);
    return s;
  };
  ModelSlots S;
  S.embedding = P.add("embedding", cfg_.vocab_size, d, true);
  S.enc_pos = P.add("enc_pos", cfg_.max_len, d, true);
  S.dec_pos = P.add("dec_pos", cfg_.max_len, d, true);
  for (int l = 0; l < cfg_.enc_layers; ++l) {
    const std::string p = "enc." + std::to_string(l);
    EncoderLayerSlots L;
    L.ln_attn = norm(p + ".ln_attn");
    L.attn = attn(p + ".attn");
    L.ln_ffn = norm(p + ".ln_ffn");
    L.ffn = ffn(p + ".ffn");
    S.enc.push_back(L);
  }
  S.enc_final = norm("enc_final");
  for (int l = 0; l < cfg_.dec_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    DecoderLayerSlots L;
    L.ln_self = norm(p + ".ln_self");
    L.self_attn = attn(p + ".self_attn");
    L.ln_cross = norm(p + ".ln_cross");
    L.cross_attn = attn(p + ".cross_attn");
    L.ln_ffn = norm(p + ".ln_ffn");
    L.ffn = ffn(p + ".ffn");
    S.dec.push_back(L);
  }
  S.dec_final = norm("dec_final");
  return S;
}

template <typename T>
Transformer<T>::Transformer(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  slots_ = build_slots(params_);
  Rng rng(derive_seed({cfg_.init_seed, static_cast<std::uint64_t>(Stream::kInit)}));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Matrix<T>& t = params_.tensors[i];
    const std::string& name = params_.names[i];
    if (name.ends_with(".gain")) {
      t.setOnes();
    } else if (name.ends_with(".bias") || name.ends_with(".b1") || name.ends_with(".b2")) {
      t.setZero();
    } else {
      for (Eigen::Index j = 0; j < t.size(); ++j) {
        t.data()[j] = static_cast<T>(kInitStd * rng.normal());
      }
    }
  }
}

template <typename T>
Transformer<T>::Transformer(const ModelConfig& cfg, ParameterSet<T> params) : cfg_(cfg) {
  cfg_.validate();
  ParameterSet<T> layout;
  slots_ = build_slots(layout);
  if (params.size() != layout.size()) {
    throw DataError("parameter count does not match the model configuration");
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (params.names[i] != layout.names[i] ||
        params.tensors[i].rows() != layout.tensors[i].rows() ||
        params.tensors[i].cols() != layout.tensors[i].cols()) {
      throw DataError("parameter '" + params.names[i] + "' does not match the configuration");
    }
  }
  params.decays = layout.decays;
  params_ = std::move(params);
}

template <typename T>
void Transformer<T>::check_lengths(std::size_t enc_len, std::size_t dec_len) const {
  if (enc_len > static_cast<std::size_t>(cfg_.max_len) ||
      dec_len > static_cast<std::size_t>(cfg_.max_len)) {
    throw std::invalid_argument("sequence longer than model max_len " +
                                std::to_string(cfg_.max_len));
  }
}

template <typename T>
typename Transformer<T>::Mat Transformer<T>::encode(std::span<const TokenId> ids,
                                                    const BoolMatrix& enc_mask) const {
  check_lengths(ids.size(), 0);
  return run_encoder<T>(cfg_, slots_, params_, ids, enc_mask, nullptr, nullptr);
}

template <typename T>
typename Transformer<T>::Mat Transformer<T>::decode(const Mat& enc_out,
                                                    std::span<const TokenId> ids,
                                                    const BoolMatrix& dec_mask,
                                                    const BoolMatrix& cross_mask) const {
  check_lengths(0, ids.size());
  const Mat h = run_decoder<T>(cfg_, slots_, params_, enc_out, ids, dec_mask, cross_mask,
                               nullptr, nullptr);
  return h * params_.tensors[slots_.embedding].transpose();
}

template <typename T>
typename Transformer<T>::Mat Transformer<T>::forward(std::span<const TokenId> enc,
                                                     std::span<const TokenId> dec,
                                                     const AttentionMaskSet& masks) const {
  return decode(encode(enc, masks.enc_self), dec, masks.dec_self, masks.cross);
}

template <typename T>
void Transformer<T>::forward_backward(std::span<const TokenId> enc, std::span<const TokenId> dec,
                                      const AttentionMaskSet& masks, const LossGradFn& loss_grad,
                                      ParameterSet<T>& grads, Rng* dropout_rng) const {
  check_lengths(enc.size(), dec.size());
  StackTrace<T> enc_trace, dec_trace;
  const Mat enc_out =
      run_encoder<T>(cfg_, slots_, params_, enc, masks.enc_self, &enc_trace, dropout_rng);
  const Mat h = run_decoder<T>(cfg_, slots_, params_, enc_out, dec, masks.dec_self, masks.cross,
                               &dec_trace, dropout_rng);
  const Matrix<T>& E = params_.tensors[slots_.embedding];
  const Mat logits = h * E.transpose();
  Mat dlogits = Mat::Zero(logits.rows(), logits.cols());
  loss_grad(logits, dlogits);

  grads.tensors[slots_.embedding].noalias() += dlogits.transpose() * h;
  const Mat dh = dlogits * E;
  const Mat denc = backprop_decoder<T>(cfg_, slots_, params_, dec_trace, dec, dh,
                                       static_cast<Eigen::Index>(enc.size()), grads, fault_);
  backprop_encoder<T>(cfg_, slots_, params_, enc_trace, enc, denc, grads, fault_);
}

template <typename T>
std::vector<TokenId> Transformer<T>::greedy_decode(std::span<const TokenId> enc,
                                                   const BoolMatrix& enc_mask,
                                                   std::size_t max_out,
                                                   const VocabLayout& layout,
                                                   MaskOptions opts) const {
  const Mat enc_out = encode(enc, enc_mask);
  std::vector<TokenId> prefix{layout.bos()};
  std::vector<TokenId> emitted;
  const std::size_t limit = std::min<std::size_t>(max_out, static_cast<std::size_t>(cfg_.max_len));
  while (emitted.size() < limit) {
    const BoolMatrix dec_mask = build_decoder_mask(prefix, layout, opts);
    const BoolMatrix cross = build_cross_mask(prefix, enc, layout, opts);
    const Mat logits = decode(enc_out, prefix, dec_mask, cross);
    Eigen::Index best = 0;
    logits.row(logits.rows() - 1).maxCoeff(&best);
    const auto next = static_cast<TokenId>(best);
    emitted.push_back(next);
    if (next == layout.eos()) break;
    prefix.push_back(next);
  }
  return emitted;
}

template struct ParameterSet<float>;
template struct ParameterSet<double>;
template class Transformer<float>;
template class Transformer<double>;

}  // namespace depth
