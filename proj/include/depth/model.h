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

#ifndef DEPTH_MODEL_H_
#define DEPTH_MODEL_H_

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "depth/masks.h"
#include "depth/random.h"
#include "depth/vocab.h"

namespace depth {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct ModelConfig {
  int d_model = 128;
  int n_heads = 4;
  int enc_layers = 2;
  int dec_layers = 2;
  int d_ff = 512;
  int vocab_size = 0;
  int max_len = 512;
  double dropout = 0.0;
  std::uint64_t init_seed = 0;

  void validate() const;
  int head_dim() const { return d_model / n_heads; }
  bool operator==(const ModelConfig&) const = default;
};

// Named parameter tensors. Vectors (biases, norm gains) are stored as 1 x n.
template <typename T>
struct ParameterSet {
  std::vector<std::string> names;
  std::vector<Matrix<T>> tensors;
  std::vector<bool> decays;  // weight decay applies

  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols, bool decay);
  std::size_t size() const { return tensors.size(); }
  std::size_t scalar_count() const;
  void set_zero();
  // Same names and shapes, all zeros.
  ParameterSet zeros_like() const;
  bool all_finite() const;
};

struct LayerNormSlots {
  std::size_t gain = 0;
  std::size_t bias = 0;
};
struct AttentionSlots {
  std::size_t wq = 0, wk = 0, wv = 0, wo = 0;
};
struct FeedForwardSlots {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
};
struct EncoderLayerSlots {
  LayerNormSlots ln_attn;
  AttentionSlots attn;
  LayerNormSlots ln_ffn;
  FeedForwardSlots ffn;
};
struct DecoderLayerSlots {
  LayerNormSlots ln_self;
  AttentionSlots self_attn;
  LayerNormSlots ln_cross;
  AttentionSlots cross_attn;
  LayerNormSlots ln_ffn;
  FeedForwardSlots ffn;
};
struct ModelSlots {
  std::size_t embedding = 0;  // shared by encoder, decoder and output
  std::size_t enc_pos = 0;
  std::size_t dec_pos = 0;
  std::vector<EncoderLayerSlots> enc;
  std::vector<DecoderLayerSlots> dec;
  LayerNormSlots enc_final;
  LayerNormSlots dec_final;
};

// Deliberate backward-pass bugs, for checking that the gradient check can see
// them.
enum class BackwardFault { kNone, kLayerNormDropsMeanTerms };

// Pre-LN encoder-decoder transformer with learned absolute positions, GELU
// feed-forward blocks and tied input/output embeddings. Every attention path
// takes an explicit boolean mask; false cells get exactly zero weight and a
// row with no allowed cell produces a zero output.
template <typename T>
class Transformer {
 public:
  using Mat = Matrix<T>;
  using LossGradFn = std::function<void(const Mat& logits, Mat& dlogits)>;

  explicit Transformer(const ModelConfig& cfg);
  Transformer(const ModelConfig& cfg, ParameterSet<T> params);

  const ModelConfig& config() const { return cfg_; }
  const ModelSlots& slots() const { return slots_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }
  std::size_t parameter_count() const { return params_.scalar_count(); }

  Mat forward(std::span<const TokenId> encoder_ids, std::span<const TokenId> decoder_input_ids,
              const AttentionMaskSet& masks) const;
  Mat encode(std::span<const TokenId> encoder_ids, const BoolMatrix& enc_mask) const;
  Mat decode(const Mat& encoder_out, std::span<const TokenId> decoder_input_ids,
             const BoolMatrix& dec_mask, const BoolMatrix& cross_mask) const;

  // Forward pass, then `loss_grad` fills d(loss)/d(logits), then the
  // gradient is accumulated into `grads`. A non-null `dropout_rng` enables
  // dropout at the configured rate.
  void forward_backward(std::span<const TokenId> encoder_ids,
                        std::span<const TokenId> decoder_input_ids,
                        const AttentionMaskSet& masks, const LossGradFn& loss_grad,
                        ParameterSet<T>& grads, Rng* dropout_rng = nullptr) const;

  // Emits tokens until <EOS> or max_out. Decoder and cross masks are rebuilt
  // from the emitted prefix at every step.
  std::vector<TokenId> greedy_decode(std::span<const TokenId> encoder_ids,
                                     const BoolMatrix& enc_mask, std::size_t max_out,
                                     const VocabLayout& layout, MaskOptions opts = {}) const;

  template <typename U>
  Transformer<U> cast() const;

  void set_backward_fault(BackwardFault fault) { fault_ = fault; }

 private:
  ModelSlots build_slots(ParameterSet<T>& params) const;
  void check_lengths(std::size_t enc_len, std::size_t dec_len) const;

  ModelConfig cfg_;
  ModelSlots slots_;
  ParameterSet<T> params_;
  BackwardFault fault_ = BackwardFault::kNone;
};

template <typename T>
template <typename U>
Transformer<U> Transformer<T>::cast() const {
  ParameterSet<U> converted;
  converted.names = params_.names;
  converted.decays = params_.decays;
  for (const auto& t : params_.tensors) converted.tensors.push_back(t.template cast<U>());
  return Transformer<U>(cfg_, std::move(converted));
}

namespace kernels {

// Row-wise softmax over allowed cells. Disallowed cells, whatever their
// score, come out exactly 0; a row with no allowed cell is all zeros.
template <typename T>
Matrix<T> masked_softmax(const Matrix<T>& scores, const BoolMatrix& mask);

}  // namespace kernels

extern template class Transformer<float>;
extern template class Transformer<double>;

}  // namespace depth

#endif  // DEPTH_MODEL_H_
