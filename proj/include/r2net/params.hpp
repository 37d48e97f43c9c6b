#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "r2net/rng.hpp"
#include "r2net/tensor.hpp"

namespace r2net {

// Named trainable tensors in registration order. Registration order fixes
// both the initialization draw order and the checkpoint layout.
class ParamStore {
public:
    // Uniform(-scale, scale) initialization.
    Tensor add_uniform(const std::string& name, Shape shape, Rng& rng, double scale);
    Tensor add_constant(const std::string& name, Shape shape, double value);

    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const;

    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::vector<Tensor> tensors() const;
    std::size_t parameter_count() const;

    void zero_grad();

    // Deep copies of the current values, in registration order.
    std::vector<std::vector<double>> snapshot() const;
    void restore(const std::vector<std::vector<double>>& values);

    // FNV-1a over the raw bytes of every value.
    std::uint64_t checksum() const;

private:
    Tensor add(const std::string& name, Tensor tensor);

    std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace r2net
