#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace r2net {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// One vertex of the autodiff graph. `inputs` and the closure in `backward`
// form the computation record; the closure reads its own node's grad and
// accumulates into the inputs' grads.
struct Node {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until first written
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;

    bool is_leaf() const { return !backward; }
    std::vector<double>& grad_buffer();
};

}  // namespace detail

// Dense row-major array of doubles with an optional gradient. Copies are
// shallow: two Tensor handles may refer to the same graph node.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor vector(std::vector<double> values, bool requires_grad = false);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                         bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const;

    // Views into the node; not available on temporaries, whose node may die first.
    std::span<const double> values() const&;
    std::span<const double> values() const&& = delete;
    // Leaf tensors only; used by optimizers, checkpoints and finite differences.
    std::span<double> mutable_values();
    double item() const;
    double value(std::size_t flat_index) const;
    double at(std::size_t row, std::size_t col) const;

    bool requires_grad() const;
    bool is_leaf() const;
    bool has_grad() const;
    std::span<const double> grad() const&;
    std::span<const double> grad() const&& = delete;
    void zero_grad();
    const char* op() const;

    // Same values, no lineage.
    Tensor detach() const;

    const std::shared_ptr<detail::Node>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

// Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls;
// intermediate gradients are recomputed on every call.
void backward(const Tensor& loss);

bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

namespace detail {

// Builds an op result. The record is attached only when grad mode is on and
// some input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> values, const char* op,
                   std::vector<Tensor> inputs, std::function<void(Node&)> backward);

}  // namespace detail

}  // namespace r2net
