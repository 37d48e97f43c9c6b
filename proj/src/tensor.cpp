#include "r2net/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "r2net/errors.hpp"

namespace r2net {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::vector<double>& detail::Node::grad_buffer() {
    if (grad.empty()) grad.assign(values.size(), 0.0);
    return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
    for (std::size_t extent : shape) {
        if (extent == 0) throw DimensionError("tensor extents must be positive: " + shape_string(shape));
    }
    if (element_count(shape) != values.size()) {
        throw DimensionError("shape " + shape_string(shape) + " does not hold " +
                             std::to_string(values.size()) + " values");
    }
    node_ = std::make_shared<detail::Node>();
    node_->shape = std::move(shape);
    node_->values = std::move(values);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = element_count(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values, bool requires_grad) {
    return Tensor({rows, cols}, std::move(values), requires_grad);
}

namespace {
const detail::Node& checked(const std::shared_ptr<detail::Node>& node) {
    if (!node) throw ContractError("use of an undefined tensor");
    return *node;
}
}  // namespace

const Shape& Tensor::shape() const { return checked(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const Shape& s = shape();
    if (axis >= s.size()) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(s));
    return s[axis];
}

std::size_t Tensor::size() const { return checked(node_).values.size(); }

std::span<const double> Tensor::values() const& { return checked(node_).values; }

std::span<double> Tensor::mutable_values() {
    checked(node_);
    if (!node_->is_leaf()) throw ContractError("only leaf tensors may be mutated in place");
    return node_->values;
}

double Tensor::item() const {
    if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
    return node_->values[0];
}

double Tensor::value(std::size_t flat_index) const { return values()[flat_index]; }

double Tensor::at(std::size_t row, std::size_t col) const {
    if (rank() != 2) throw DimensionError("at(row, col) on tensor of shape " + shape_string(shape()));
    return node_->values[row * node_->shape[1] + col];
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }
bool Tensor::is_leaf() const { return checked(node_).is_leaf(); }
bool Tensor::has_grad() const { return !checked(node_).grad.empty(); }
std::span<const double> Tensor::grad() const& { return checked(node_).grad; }

void Tensor::zero_grad() {
    checked(node_);
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

const char* Tensor::op() const { return checked(node_).op; }

Tensor Tensor::detach() const { return Tensor(shape(), checked(node_).values, false); }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor detail::make_result(Shape shape, std::vector<double> values, const char* op, std::vector<Tensor> inputs,
                           std::function<void(Node&)> backward_fn) {
    Tensor out(std::move(shape), std::move(values), false);
    Node& node = *out.node();
    node.op = op;
    if (!g_grad_enabled) return out;
    const bool any = std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.requires_grad(); });
    if (!any) return out;
    node.requires_grad = true;
    node.inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) node.inputs.push_back(t.node());
    node.backward = std::move(backward_fn);
    return out;
}

void backward(const Tensor& loss) {
    if (!loss.defined()) throw ContractError("backward on an undefined tensor");
    if (loss.size() != 1) throw ContractError("backward requires a scalar loss, got shape " + shape_string(loss.shape()));
    if (!loss.requires_grad()) return;

    // Iterative post-order DFS gives a topological order with each node once.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    detail::Node* root = loss.node().get();
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            detail::Node* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (detail::Node* node : order) {
        if (!node->is_leaf()) node->grad.assign(node->values.size(), 0.0);
    }
    root->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (!(*it)->is_leaf()) (*it)->backward(**it);
    }
}

}  // namespace r2net
