#pragma once

#include <cstdint>
#include <optional>

#include "r2net/encoder_global.hpp"
#include "r2net/encoder_local.hpp"
#include "r2net/heads.hpp"
#include "r2net/params.hpp"
#include "r2net/train_config.hpp"
#include "r2net/vocabulary.hpp"

namespace r2net {

struct ModelConfig {
    GlobalEncoderConfig global;
    LocalEncoderConfig local;
    bool use_local = true;
    HeadsConfig heads;

    // dim, or dim + local output width when the local encoder is on.
    std::size_t representation_dim() const;
};

ModelConfig make_model_config(const TrainConfig& config, std::size_t vocab_size);

struct PairRepresentation {
    Tensor v;    // [v_g; v_l], or v_g alone without the local encoder
    Tensor v_g;
    Tensor v_l;  // undefined without the local encoder
};

// Global encoder, optional local encoder and the three heads over one
// ParamStore. Copying is disabled because encoders hold handles into the store.
class R2Net {
public:
    R2Net(const ModelConfig& config, Vocabulary vocab, std::uint64_t init_seed);
    R2Net(R2Net&&) = default;
    R2Net& operator=(R2Net&&) = default;
    R2Net(const R2Net&) = delete;
    R2Net& operator=(const R2Net&) = delete;

    InputSequence input_for(const SentencePair& pair) const;
    PairRepresentation represent(const InputSequence& input) const;
    PairRepresentation represent(const SentencePair& pair) const { return represent(input_for(pair)); }

    const GlobalEncoder& global() const { return *global_; }
    const LocalEncoder* local() const { return local_ ? &*local_ : nullptr; }
    const MatchingHeads& heads() const { return *heads_; }

    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    const Vocabulary& vocab() const { return vocab_; }
    const ModelConfig& config() const { return config_; }

private:
    ModelConfig config_;
    Vocabulary vocab_;
    ParamStore store_;
    std::optional<GlobalEncoder> global_;
    std::optional<LocalEncoder> local_;
    std::optional<MatchingHeads> heads_;
};

}  // namespace r2net
