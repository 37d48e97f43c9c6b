#include "r2net/encoder_local.hpp"

#include <algorithm>
#include <string>

#include "r2net/errors.hpp"

namespace r2net {

Mask window_mask(const Mask& mask, std::size_t width) {
    const std::size_t len = mask.size();
    const std::size_t left = (width - 1) / 2;
    Mask valid(len, false);
    for (std::size_t t = 0; t < len; ++t) {
        if (t < left || t - left + width > len) continue;
        bool all_real = true;
        for (std::size_t j = 0; j < width && all_real; ++j) all_real = mask[t - left + j];
        valid[t] = all_real;
    }
    return valid;
}

LocalEncoder::LocalEncoder(ParamStore& store, const LocalEncoderConfig& config, Rng& rng) : config_(config) {
    if (config.kernel_widths.empty()) throw ContractError("local encoder needs at least one kernel width");
    std::sort(config_.kernel_widths.begin(), config_.kernel_widths.end());
    if (std::adjacent_find(config_.kernel_widths.begin(), config_.kernel_widths.end()) != config_.kernel_widths.end()) {
        throw ContractError("kernel widths must be distinct");
    }
    const double s = config.init_scale;
    for (std::size_t width : config_.kernel_widths) {
        if (width == 0) throw ContractError("kernel widths must be positive");
        const std::string name = "local.conv" + std::to_string(width);
        kernels_.push_back(store.add_uniform(name + ".kernel", {width, config.input_dim, config.channels}, rng, s));
        kernel_biases_.push_back(store.add_uniform(name + ".bias", {config.channels}, rng, s));
    }
    const std::size_t concat_width = 2 * config.kernel_widths.size() * config.channels;
    projection_ = store.add_uniform("local.w", {concat_width, config.output_dim}, rng, s);
    projection_bias_ = store.add_uniform("local.b", {config.output_dim}, rng, s);
}

LocalFeatures LocalEncoder::encode(const Tensor& H, const Mask& mask) const {
    if (H.rank() != 2 || H.dim(1) != config_.input_dim) {
        throw DimensionError("local encoder expects [seq x " + std::to_string(config_.input_dim) + "], got " +
                             shape_string(H.shape()));
    }
    const auto real = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
    LocalFeatures out;
    std::vector<Tensor> pooled;
    for (std::size_t k = 0; k < kernels_.size(); ++k) {
        const std::size_t width = config_.kernel_widths[k];
        if (width > real) {
            throw DegenerateInputError("sequence of " + std::to_string(real) + " real tokens is shorter than kernel width " +
                                       std::to_string(width));
        }
        const Tensor features = conv1d(H, kernels_[k], kernel_biases_[k]);
        const Mask valid = window_mask(mask, width);
        out.max_pooled.push_back(masked_max_pool(features, valid));
        out.avg_pooled.push_back(masked_avg_pool(features, valid));
        pooled.push_back(out.max_pooled.back());
        pooled.push_back(out.avg_pooled.back());
    }
    out.h_concat = concat(pooled, 0);
    out.v_l = relu(linear(out.h_concat, projection_, projection_bias_));
    return out;
}

Tensor fuse(const Tensor& v_g, const Tensor& v_l) { return concat({v_g, v_l}, 0); }

}  // namespace r2net
