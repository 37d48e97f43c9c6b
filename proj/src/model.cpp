#include "r2net/model.hpp"

namespace r2net {

std::size_t ModelConfig::representation_dim() const {
    return global.dim + (use_local ? local.output_dim : 0);
}

ModelConfig make_model_config(const TrainConfig& config, std::size_t vocab_size) {
    ModelConfig m;
    m.global.vocab_size = vocab_size;
    m.global.dim = config.dim;
    m.global.heads = config.heads;
    m.global.ff_dim = config.ff_dim;
    m.global.layers = config.layers;
    m.global.max_len = config.max_len;
    m.global.init_scale = config.init_scale;
    m.local.input_dim = config.dim;
    m.local.kernel_widths = config.kernel_widths;
    m.local.channels = config.effective_conv_channels();
    m.local.output_dim = config.effective_local_dim();
    m.local.init_scale = config.init_scale;
    m.use_local = !config.ablation.no_local;
    m.heads.input_dim = m.representation_dim();
    m.heads.hidden_dim = config.mlp_dim;
    m.heads.num_labels = num_labels(config.task);
    m.heads.init_scale = config.init_scale;
    return m;
}

R2Net::R2Net(const ModelConfig& config, Vocabulary vocab, std::uint64_t init_seed)
    : config_(config), vocab_(std::move(vocab)) {
    config_.global.vocab_size = vocab_.size();
    config_.heads.input_dim = config_.representation_dim();
    Rng rng(init_seed);
    global_.emplace(store_, config_.global, rng);
    if (config_.use_local) local_.emplace(store_, config_.local, rng);
    heads_.emplace(store_, config_.heads, rng);
}

InputSequence R2Net::input_for(const SentencePair& pair) const { return build_input_sequence(pair, vocab_); }

PairRepresentation R2Net::represent(const InputSequence& input) const {
    PairRepresentation out;
    const EncodedPair encoded = global_->encode(input);
    out.v_g = encoded.v_g;
    if (local_) {
        out.v_l = local_->encode(encoded.H, encoded.mask).v_l;
        out.v = fuse(out.v_g, out.v_l);
    } else {
        out.v = out.v_g;
    }
    return out;
}

}  // namespace r2net
