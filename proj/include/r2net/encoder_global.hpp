#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "r2net/dataset.hpp"
#include "r2net/ops.hpp"
#include "r2net/params.hpp"
#include "r2net/vocabulary.hpp"

namespace r2net {

// Token, segment and mask arrays for "[CLS] s_a [SEP] s_b [SEP]".
struct InputSequence {
    std::vector<int> token_ids;
    std::vector<int> segment_ids;
    Mask mask;

    std::size_t length() const { return token_ids.size(); }
};

// Segment 0 covers [CLS], s_a and the first [SEP]; segment 1 the rest.
// With pad_to > length, PAD positions (segment 0, mask false) are appended.
InputSequence build_input_sequence(const SentencePair& pair, const Vocabulary& vocab, std::size_t pad_to = 0);

struct TransformerBlockParams {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln1_gamma, ln1_beta;
    Tensor w1, b1, w2, b2;
    Tensor ln2_gamma, ln2_beta;
    std::size_t heads = 1;
    double ln_eps = 1e-5;
};

TransformerBlockParams make_block_params(ParamStore& store, const std::string& prefix, std::size_t dim,
                                         std::size_t heads, std::size_t ff_dim, Rng& rng, double init_scale);

// Multi-head self-attention; keys at masked positions get weight exactly 0.
// When `attention` is non-null it receives one [seq x seq] weight matrix per head.
Tensor self_attention(const Tensor& x, const TransformerBlockParams& p, const Mask& mask,
                      std::vector<Tensor>* attention = nullptr);

// Post-norm block:
//   a = LayerNorm(x + Attention(x))
//   y = LayerNorm(a + W2 ReLU(W1 a + b1) + b2)
Tensor transformer_block(const Tensor& x, const TransformerBlockParams& p, const Mask& mask,
                         std::vector<Tensor>* attention = nullptr);

// sum_l softmax(logits)_l * layers[l].
Tensor layer_mix(std::span<const Tensor> layers, const Tensor& logits);

struct GlobalEncoderConfig {
    std::size_t vocab_size = 0;
    std::size_t dim = 32;
    std::size_t heads = 4;
    std::size_t ff_dim = 64;
    std::size_t layers = 2;
    std::size_t max_len = 32;
    double init_scale = 0.05;
};

struct EncodedPair {
    Tensor H;    // [seq x dim], layer-mixed
    Tensor v_g;  // [dim], last layer at position 0
    Mask mask;
    std::vector<Tensor> layer_outputs;
};

class GlobalEncoder {
public:
    GlobalEncoder(ParamStore& store, const GlobalEncoderConfig& config, Rng& rng);

    // Throws DimensionError when the sequence exceeds max_len.
    EncodedPair encode(const InputSequence& input) const;

    const GlobalEncoderConfig& config() const { return config_; }
    const Tensor& token_embedding() const { return token_embedding_; }
    const Tensor& mix_logits() const { return mix_logits_; }
    const std::vector<TransformerBlockParams>& blocks() const { return blocks_; }

private:
    GlobalEncoderConfig config_;
    Tensor token_embedding_;
    Tensor position_embedding_;
    Tensor segment_embedding_;
    std::vector<TransformerBlockParams> blocks_;
    Tensor mix_logits_;
};

}  // namespace r2net
