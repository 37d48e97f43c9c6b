#pragma once

#include <cstddef>
#include <vector>

#include "r2net/ops.hpp"
#include "r2net/params.hpp"

namespace r2net {

struct LocalEncoderConfig {
    std::size_t input_dim = 32;
    std::vector<std::size_t> kernel_widths{1, 2, 3};
    std::size_t channels = 32;    // per kernel
    std::size_t output_dim = 32;  // width of v_l
    double init_scale = 0.05;
};

// Positions of a same-padded width-k convolution whose window lies entirely
// on real tokens. Windows that touch padding or run off either end are
// excluded from pooling, which makes pooled features independent of how
// much padding follows the sequence.
Mask window_mask(const Mask& mask, std::size_t width);

struct LocalFeatures {
    Tensor v_l;       // [output_dim]
    Tensor h_concat;  // [2 * K * channels], ordered max_1, avg_1, ..., max_K, avg_K
    std::vector<Tensor> max_pooled;
    std::vector<Tensor> avg_pooled;
};

// Kernels are kept in ascending width order whatever order the config lists.
class LocalEncoder {
public:
    LocalEncoder(ParamStore& store, const LocalEncoderConfig& config, Rng& rng);

    // Throws DegenerateInputError when the real sequence is shorter than a kernel.
    LocalFeatures encode(const Tensor& H, const Mask& mask) const;

    const LocalEncoderConfig& config() const { return config_; }
    const std::vector<Tensor>& kernels() const { return kernels_; }
    const Tensor& projection() const { return projection_; }

private:
    LocalEncoderConfig config_;
    std::vector<Tensor> kernels_;
    std::vector<Tensor> kernel_biases_;
    Tensor projection_;
    Tensor projection_bias_;
};

// v = [v_g; v_l].
Tensor fuse(const Tensor& v_g, const Tensor& v_l);

}  // namespace r2net
