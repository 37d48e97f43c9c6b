#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "r2net/dataset.hpp"

namespace r2net {

struct AblationFlags {
    bool no_local = false;
    bool no_r2 = false;
    bool no_triplet = false;

    bool operator==(const AblationFlags&) const = default;
};

// "full", "no_local", "no_r2", "no_triplet", or a '+'-joined combination.
std::string variant_name(const AblationFlags& flags);

struct TrainConfig {
    Task task = Task::nli;

    std::size_t dim = 32;
    std::size_t heads = 4;
    std::size_t ff_dim = 64;
    std::size_t layers = 2;
    std::size_t max_len = 32;
    std::vector<std::size_t> kernel_widths{1, 2, 3};
    std::size_t conv_channels = 0;  // 0: same as dim
    std::size_t local_dim = 0;      // 0: same as dim
    std::size_t mlp_dim = 32;
    double init_scale = 0.05;

    double margin = 0.2;
    double beta = 0.5;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t epochs = 30;
    std::size_t batch_size = 8;
    std::uint64_t seed = 7;
    std::uint64_t eval_seed = 1234;

    AblationFlags ablation;

    std::size_t effective_conv_channels() const { return conv_channels ? conv_channels : dim; }
    std::size_t effective_local_dim() const { return local_dim ? local_dim : dim; }

    // Throws ContractError naming the offending field.
    void validate() const;

    // Stable key=value form; the inverse of set().
    std::vector<std::pair<std::string, std::string>> to_key_values() const;
    void set(const std::string& key, const std::string& value);

    bool operator==(const TrainConfig&) const = default;
};

std::string format_config(const TrainConfig& config);
TrainConfig parse_config(const std::string& text, const std::string& source = "<config>");
// Applies each key=value line of `text` onto `config`; '#' starts a comment.
void merge_config(TrainConfig& config, const std::string& text, const std::string& source = "<config>");

}  // namespace r2net
