#include "r2net/params.hpp"

#include <algorithm>
#include <cstring>

#include "r2net/errors.hpp"

namespace r2net {

Tensor ParamStore::add(const std::string& name, Tensor tensor) {
    if (contains(name)) throw ContractError("duplicate parameter name: " + name);
    entries_.emplace_back(name, tensor);
    return tensor;
}

Tensor ParamStore::add_uniform(const std::string& name, Shape shape, Rng& rng, double scale) {
    std::vector<double> values(element_count(shape));
    for (double& v : values) v = rng.uniform(-scale, scale);
    return add(name, Tensor(std::move(shape), std::move(values), true));
}

Tensor ParamStore::add_constant(const std::string& name, Shape shape, double value) {
    return add(name, Tensor::full(std::move(shape), value, true));
}

const Tensor& ParamStore::get(const std::string& name) const {
    for (const auto& [key, tensor] : entries_) {
        if (key == name) return tensor;
    }
    throw ContractError("unknown parameter: " + name);
}

bool ParamStore::contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::vector<Tensor> ParamStore::tensors() const {
    std::vector<Tensor> out;
    out.reserve(entries_.size());
    for (const auto& entry : entries_) out.push_back(entry.second);
    return out;
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& entry : entries_) n += entry.second.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& entry : entries_) entry.second.zero_grad();
}

std::vector<std::vector<double>> ParamStore::snapshot() const {
    std::vector<std::vector<double>> out;
    out.reserve(entries_.size());
    for (const auto& entry : entries_) out.emplace_back(entry.second.values().begin(), entry.second.values().end());
    return out;
}

void ParamStore::restore(const std::vector<std::vector<double>>& values) {
    if (values.size() != entries_.size()) throw ContractError("restore: parameter count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto dst = entries_[i].second.mutable_values();
        if (dst.size() != values[i].size()) throw ContractError("restore: size mismatch for " + entries_[i].first);
        std::copy(values[i].begin(), values[i].end(), dst.begin());
    }
}

std::uint64_t ParamStore::checksum() const {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const auto& entry : entries_) {
        for (double v : entry.second.values()) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            for (unsigned char b : bytes) {
                hash ^= b;
                hash *= 0x100000001b3ULL;
            }
        }
    }
    return hash;
}

}  // namespace r2net
