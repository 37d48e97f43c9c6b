#include "r2net/heads.hpp"

#include "r2net/errors.hpp"

namespace r2net {

Mlp Mlp::make(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden, std::size_t out,
              Rng& rng, double init_scale) {
    Mlp m;
    m.w1 = store.add_uniform(prefix + ".w1", {in, hidden}, rng, init_scale);
    m.b1 = store.add_uniform(prefix + ".b1", {hidden}, rng, init_scale);
    m.w2 = store.add_uniform(prefix + ".w2", {hidden, out}, rng, init_scale);
    m.b2 = store.add_uniform(prefix + ".b2", {out}, rng, init_scale);
    return m;
}

Tensor Mlp::logits(const Tensor& x) const { return linear(relu(linear(x, w1, b1)), w2, b2); }

MatchingHeads::MatchingHeads(ParamStore& store, const HeadsConfig& config, Rng& rng) : config_(config) {
    const double s = config.init_scale;
    const std::size_t in = config.input_dim, hidden = config.hidden_dim;
    label_mlp_ = Mlp::make(store, "heads.label_mlp", in, hidden, config.num_labels, rng, s);
    w_r_ = store.add_uniform("heads.relation.w", {in, hidden}, rng, s);
    b_r_ = store.add_uniform("heads.relation.b", {hidden}, rng, s);
    r2_mlp_ = Mlp::make(store, "heads.r2_mlp", 4 * hidden, hidden, 2, rng, s);
    w_d_ = store.add_uniform("heads.distance.w", {in, hidden}, rng, s);
    b_d_ = store.add_uniform("heads.distance.b", {hidden}, rng, s);
}

Tensor MatchingHeads::label_logits(const Tensor& v) const { return label_mlp_.logits(v); }

Tensor MatchingHeads::predict_label(const Tensor& v) const { return softmax(label_logits(v), 0); }

Tensor MatchingHeads::r2_features(const Tensor& v1, const Tensor& v2) const {
    if (v1.shape() != v2.shape()) {
        throw DimensionError("r2_features: " + shape_string(v1.shape()) + " vs " + shape_string(v2.shape()));
    }
    const Tensor r1 = relu(linear(v1, w_r_, b_r_));
    const Tensor r2 = relu(linear(v2, w_r_, b_r_));
    return concat({r1, r2, r1 * r2, r1 - r2}, 0);
}

Tensor MatchingHeads::predict_r2(const Tensor& u) const { return softmax(r2_mlp_.logits(u), 0); }

Tensor MatchingHeads::project_triplet(const Tensor& v) const { return relu(linear(v, w_d_, b_d_)); }

TripletDistances MatchingHeads::triplet_distances(const Tensor& v_a, const Tensor& v_p, const Tensor& v_n) const {
    if (v_a.shape() != v_p.shape() || v_a.shape() != v_n.shape()) {
        throw DimensionError("triplet_distances: operands differ in shape");
    }
    const Tensor a = project_triplet(v_a);
    const Tensor p = project_triplet(v_p);
    const Tensor n = project_triplet(v_n);
    return {euclidean_distance(a, p), euclidean_distance(a, n)};
}

}  // namespace r2net
