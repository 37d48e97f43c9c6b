#pragma once

#include <cstddef>
#include <string>

#include "r2net/ops.hpp"
#include "r2net/params.hpp"

namespace r2net {

// Two affine maps with a ReLU between them; returns logits.
struct Mlp {
    Tensor w1, b1, w2, b2;

    static Mlp make(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
                    std::size_t out, Rng& rng, double init_scale);
    Tensor logits(const Tensor& x) const;
};

struct HeadsConfig {
    std::size_t input_dim = 64;   // width of the fused representation v
    std::size_t hidden_dim = 32;  // d_m
    std::size_t num_labels = 3;
    double init_scale = 0.05;
};

struct TripletDistances {
    Tensor d_ap;
    Tensor d_an;
};

// Label classifier, relation-of-relation classifier and triplet projection.
// One (W_r, b_r) is applied to both pairs of an R2 group and one (W_d, b_d)
// to all three pairs of a triplet.
class MatchingHeads {
public:
    MatchingHeads(ParamStore& store, const HeadsConfig& config, Rng& rng);

    // Distribution over the task's labels.
    Tensor predict_label(const Tensor& v) const;
    Tensor label_logits(const Tensor& v) const;

    // u = [r1; r2; r1 * r2; r1 - r2] with r_i = ReLU(W_r v_i + b_r).
    Tensor r2_features(const Tensor& v1, const Tensor& v2) const;
    // Distribution over {different, same}: index 1 means the two pairs share a label.
    Tensor predict_r2(const Tensor& u) const;

    Tensor project_triplet(const Tensor& v) const;
    TripletDistances triplet_distances(const Tensor& v_a, const Tensor& v_p, const Tensor& v_n) const;

    const HeadsConfig& config() const { return config_; }
    const Mlp& label_mlp() const { return label_mlp_; }
    const Mlp& r2_mlp() const { return r2_mlp_; }
    const Tensor& relation_weight() const { return w_r_; }
    const Tensor& relation_bias() const { return b_r_; }
    const Tensor& distance_weight() const { return w_d_; }
    const Tensor& distance_bias() const { return b_d_; }

private:
    HeadsConfig config_;
    Mlp label_mlp_;
    Tensor w_r_, b_r_;
    Mlp r2_mlp_;
    Tensor w_d_, b_d_;
};

}  // namespace r2net
