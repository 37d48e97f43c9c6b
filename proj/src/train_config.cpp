#include "r2net/train_config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "r2net/errors.hpp"

namespace r2net {

std::string variant_name(const AblationFlags& flags) {
    std::string name;
    auto add = [&](bool on, const char* part) {
        if (!on) return;
        if (!name.empty()) name += '+';
        name += part;
    };
    add(flags.no_local, "no_local");
    add(flags.no_r2, "no_r2");
    add(flags.no_triplet, "no_triplet");
    return name.empty() ? "full" : name;
}

void TrainConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ContractError("invalid config: " + what);
    };
    require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
    require(margin >= 0.0, "margin must be non-negative");
    require(dim >= 1 && heads >= 1 && ff_dim >= 1 && layers >= 1 && max_len >= 1 && mlp_dim >= 1,
            "all dimensions must be at least 1");
    require(dim % heads == 0, "dim must be divisible by heads");
    require(!kernel_widths.empty(), "at least one kernel width is required");
    for (std::size_t w : kernel_widths) require(w >= 1, "kernel widths must be at least 1");
    {
        auto sorted = kernel_widths;
        std::sort(sorted.begin(), sorted.end());
        require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "kernel widths must be distinct");
    }
    require(batch_size >= 1, "batch_size must be at least 1");
    require(learning_rate >= 0.0, "learning_rate must be non-negative");
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
            "adam betas must lie in [0, 1)");
    require(adam_eps > 0.0, "adam_eps must be positive");
    require(init_scale >= 0.0, "init_scale must be non-negative");
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ContractError("invalid value '" + value + "' for " + key);
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ContractError("invalid boolean '" + value + "' for " + key);
}

std::string format_widths(const std::vector<std::size_t>& widths) {
    std::string out;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(widths[i]);
    }
    return out;
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const std::size_t comma = value.find(',', start);
        const std::string part = value.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        out.push_back(parse_number<std::size_t>(key, part));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> TrainConfig::to_key_values() const {
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    return {
        {"task", std::string(task_name(task))},
        {"dim", std::to_string(dim)},
        {"heads", std::to_string(heads)},
        {"ff_dim", std::to_string(ff_dim)},
        {"layers", std::to_string(layers)},
        {"max_len", std::to_string(max_len)},
        {"kernel_widths", format_widths(kernel_widths)},
        {"conv_channels", std::to_string(conv_channels)},
        {"local_dim", std::to_string(local_dim)},
        {"mlp_dim", std::to_string(mlp_dim)},
        {"init_scale", format_double(init_scale)},
        {"margin", format_double(margin)},
        {"beta", format_double(beta)},
        {"learning_rate", format_double(learning_rate)},
        {"adam_beta1", format_double(adam_beta1)},
        {"adam_beta2", format_double(adam_beta2)},
        {"adam_eps", format_double(adam_eps)},
        {"epochs", std::to_string(epochs)},
        {"batch_size", std::to_string(batch_size)},
        {"seed", std::to_string(seed)},
        {"eval_seed", std::to_string(eval_seed)},
        {"no_local", b(ablation.no_local)},
        {"no_r2", b(ablation.no_r2)},
        {"no_triplet", b(ablation.no_triplet)},
    };
}

void TrainConfig::set(const std::string& key, const std::string& value) {
    using Size = std::size_t;
    if (key == "task") task = parse_task(value);
    else if (key == "dim") dim = parse_number<Size>(key, value);
    else if (key == "heads") heads = parse_number<Size>(key, value);
    else if (key == "ff_dim") ff_dim = parse_number<Size>(key, value);
    else if (key == "layers") layers = parse_number<Size>(key, value);
    else if (key == "max_len") max_len = parse_number<Size>(key, value);
    else if (key == "kernel_widths") kernel_widths = parse_widths(key, value);
    else if (key == "conv_channels") conv_channels = parse_number<Size>(key, value);
    else if (key == "local_dim") local_dim = parse_number<Size>(key, value);
    else if (key == "mlp_dim") mlp_dim = parse_number<Size>(key, value);
    else if (key == "init_scale") init_scale = parse_number<double>(key, value);
    else if (key == "margin") margin = parse_number<double>(key, value);
    else if (key == "beta") beta = parse_number<double>(key, value);
    else if (key == "learning_rate") learning_rate = parse_number<double>(key, value);
    else if (key == "adam_beta1") adam_beta1 = parse_number<double>(key, value);
    else if (key == "adam_beta2") adam_beta2 = parse_number<double>(key, value);
    else if (key == "adam_eps") adam_eps = parse_number<double>(key, value);
    else if (key == "epochs") epochs = parse_number<Size>(key, value);
    else if (key == "batch_size") batch_size = parse_number<Size>(key, value);
    else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
    else if (key == "eval_seed") eval_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "no_local") ablation.no_local = parse_bool(key, value);
    else if (key == "no_r2") ablation.no_r2 = parse_bool(key, value);
    else if (key == "no_triplet") ablation.no_triplet = parse_bool(key, value);
    else throw ContractError("unknown config key '" + key + "'");
}

std::string format_config(const TrainConfig& config) {
    std::string out;
    for (const auto& [key, value] : config.to_key_values()) out += key + "=" + value + "\n";
    return out;
}

void merge_config(TrainConfig& config, const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "expected key=value");
        try {
            config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ContractError& e) {
            throw ParseError(source, line_no, e.what());
        }
    }
}

TrainConfig parse_config(const std::string& text, const std::string& source) {
    TrainConfig config;
    merge_config(config, text, source);
    return config;
}

}  // namespace r2net
