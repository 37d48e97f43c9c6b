#include "r2net/encoder_global.hpp"

#include <cmath>
#include <numeric>

#include "r2net/errors.hpp"

namespace r2net {

InputSequence build_input_sequence(const SentencePair& pair, const Vocabulary& vocab, std::size_t pad_to) {
    if (pair.s_a.empty() || pair.s_b.empty()) throw DegenerateInputError("build_input_sequence: empty sentence");
    InputSequence seq;
    auto push = [&](int id, int segment) {
        seq.token_ids.push_back(id);
        seq.segment_ids.push_back(segment);
        seq.mask.push_back(true);
    };
    push(Vocabulary::kCls, 0);
    for (const auto& t : pair.s_a) push(vocab.id(t), 0);
    push(Vocabulary::kSep, 0);
    for (const auto& t : pair.s_b) push(vocab.id(t), 1);
    push(Vocabulary::kSep, 1);
    while (seq.length() < pad_to) {
        seq.token_ids.push_back(Vocabulary::kPad);
        seq.segment_ids.push_back(0);
        seq.mask.push_back(false);
    }
    return seq;
}

TransformerBlockParams make_block_params(ParamStore& store, const std::string& prefix, std::size_t dim,
                                         std::size_t heads, std::size_t ff_dim, Rng& rng, double init_scale) {
    if (heads == 0 || dim % heads != 0) {
        throw ContractError("transformer block: dim " + std::to_string(dim) + " not divisible by " +
                            std::to_string(heads) + " heads");
    }
    TransformerBlockParams p;
    p.heads = heads;
    auto w = [&](const char* name, Shape shape) { return store.add_uniform(prefix + name, std::move(shape), rng, init_scale); };
    p.wq = w(".attn.wq", {dim, dim});
    p.bq = w(".attn.bq", {dim});
    p.wk = w(".attn.wk", {dim, dim});
    p.bk = w(".attn.bk", {dim});
    p.wv = w(".attn.wv", {dim, dim});
    p.bv = w(".attn.bv", {dim});
    p.wo = w(".attn.wo", {dim, dim});
    p.bo = w(".attn.bo", {dim});
    p.ln1_gamma = store.add_constant(prefix + ".ln1.gamma", {dim}, 1.0);
    p.ln1_beta = store.add_constant(prefix + ".ln1.beta", {dim}, 0.0);
    p.w1 = w(".ffn.w1", {dim, ff_dim});
    p.b1 = w(".ffn.b1", {ff_dim});
    p.w2 = w(".ffn.w2", {ff_dim, dim});
    p.b2 = w(".ffn.b2", {dim});
    p.ln2_gamma = store.add_constant(prefix + ".ln2.gamma", {dim}, 1.0);
    p.ln2_beta = store.add_constant(prefix + ".ln2.beta", {dim}, 0.0);
    return p;
}

Tensor self_attention(const Tensor& x, const TransformerBlockParams& p, const Mask& mask,
                      std::vector<Tensor>* attention) {
    const std::size_t dim = x.dim(1);
    if (mask.size() != x.dim(0)) throw DimensionError("self_attention: mask length does not match sequence");
    const std::size_t head_dim = dim / p.heads;
    const double scale_factor = 1.0 / std::sqrt(static_cast<double>(head_dim));
    const Tensor q = linear(x, p.wq, p.bq);
    const Tensor k = linear(x, p.wk, p.bk);
    const Tensor v = linear(x, p.wv, p.bv);
    std::vector<Tensor> contexts;
    contexts.reserve(p.heads);
    for (std::size_t h = 0; h < p.heads; ++h) {
        const std::size_t lo = h * head_dim, hi = lo + head_dim;
        const Tensor qh = p.heads == 1 ? q : slice(q, 1, lo, hi);
        const Tensor kh = p.heads == 1 ? k : slice(k, 1, lo, hi);
        const Tensor vh = p.heads == 1 ? v : slice(v, 1, lo, hi);
        const Tensor weights = masked_softmax(scale(matmul(qh, transpose(kh)), scale_factor), mask);
        if (attention) attention->push_back(weights);
        contexts.push_back(matmul(weights, vh));
    }
    const Tensor context = p.heads == 1 ? contexts[0] : concat(contexts, 1);
    return linear(context, p.wo, p.bo);
}

Tensor transformer_block(const Tensor& x, const TransformerBlockParams& p, const Mask& mask,
                         std::vector<Tensor>* attention) {
    const Tensor attended = layer_norm(x + self_attention(x, p, mask, attention), p.ln1_gamma, p.ln1_beta, p.ln_eps);
    const Tensor ff = linear(relu(linear(attended, p.w1, p.b1)), p.w2, p.b2);
    return layer_norm(attended + ff, p.ln2_gamma, p.ln2_beta, p.ln_eps);
}

Tensor layer_mix(std::span<const Tensor> layers, const Tensor& logits) {
    if (layers.empty()) throw DegenerateInputError("layer_mix: no layers");
    if (logits.rank() != 1 || logits.dim(0) != layers.size()) {
        throw DimensionError("layer_mix: " + std::to_string(layers.size()) + " layers vs logits " +
                             shape_string(logits.shape()));
    }
    for (const Tensor& layer : layers) {
        if (layer.shape() != layers[0].shape()) throw DimensionError("layer_mix: layers differ in shape");
    }
    const Tensor weights = softmax(logits, 0);
    Tensor mixed = scale_by(layers[0], pick(weights, 0));
    for (std::size_t l = 1; l < layers.size(); ++l) mixed = mixed + scale_by(layers[l], pick(weights, l));
    return mixed;
}

GlobalEncoder::GlobalEncoder(ParamStore& store, const GlobalEncoderConfig& config, Rng& rng) : config_(config) {
    if (config.layers == 0) throw ContractError("global encoder needs at least one layer");
    if (config.vocab_size == 0) throw ContractError("global encoder needs a non-empty vocabulary");
    const double s = config.init_scale;
    token_embedding_ = store.add_uniform("global.token_embedding", {config.vocab_size, config.dim}, rng, s);
    position_embedding_ = store.add_uniform("global.position_embedding", {config.max_len, config.dim}, rng, s);
    segment_embedding_ = store.add_uniform("global.segment_embedding", {2, config.dim}, rng, s);
    for (std::size_t l = 0; l < config.layers; ++l) {
        blocks_.push_back(make_block_params(store, "global.block" + std::to_string(l), config.dim, config.heads,
                                            config.ff_dim, rng, s));
    }
    mix_logits_ = store.add_uniform("global.mix_logits", {config.layers}, rng, s);
}

EncodedPair GlobalEncoder::encode(const InputSequence& input) const {
    const std::size_t n = input.length();
    if (n > config_.max_len) {
        throw DimensionError("sequence of length " + std::to_string(n) + " exceeds positional table of " +
                             std::to_string(config_.max_len));
    }
    std::vector<int> positions(n);
    std::iota(positions.begin(), positions.end(), 0);
    Tensor h = embedding_lookup(token_embedding_, input.token_ids) + embedding_lookup(position_embedding_, positions) +
               embedding_lookup(segment_embedding_, input.segment_ids);
    EncodedPair out;
    out.mask = input.mask;
    for (const auto& block : blocks_) {
        h = transformer_block(h, block, input.mask);
        out.layer_outputs.push_back(h);
    }
    out.H = layer_mix(out.layer_outputs, mix_logits_);
    out.v_g = row(out.layer_outputs.back(), 0);
    return out;
}

}  // namespace r2net
