// SPDX-License-Identifier: Apache-2.0

#include "diva/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace diva {

namespace {

std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor() : node_(std::make_shared<detail::Node>()) {
    node_->shape = {0, 0};
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto n = numel(shape);
    return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape.empty() || shape.size() > 2)
        throw DimensionError("tensor rank must be 1 or 2, got " + shape_str(shape));
    if (numel(shape) != data.size())
        throw DimensionError("data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                      bool requires_grad) {
    return from({rows, cols}, std::move(data), requires_grad);
}

Tensor Tensor::vector(std::vector<double> data, bool requires_grad) {
    auto n = data.size();
    return from({n}, std::move(data), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from({1}, {v}, requires_grad);
}

Tensor Tensor::randn(Shape shape, double stddev, std::mt19937_64& rng, bool requires_grad) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> data(numel(shape));
    for (auto& v : data) v = dist(rng);
    return from(std::move(shape), std::move(data), requires_grad);
}

std::size_t Tensor::rows() const {
    return node_->shape.size() == 1 ? 1 : node_->shape[0];
}

std::size_t Tensor::cols() const {
    return node_->shape.size() == 1 ? node_->shape[0] : node_->shape[1];
}

double Tensor::item() const {
    if (node_->value.size() != 1)
        throw DimensionError("item() on tensor of shape " + shape_str(node_->shape));
    return node_->value[0];
}

Tensor Tensor::detach(bool requires_grad) const {
    return from(node_->shape, node_->value, requires_grad);
}

bool Tensor::bitwise_equal(const Tensor& other) const {
    if (shape() != other.shape()) return false;
    return std::memcmp(node_->value.data(), other.node_->value.data(),
                       node_->value.size() * sizeof(double)) == 0;
}

Tensor Tensor::make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                           std::function<void(detail::Node&)> backward) {
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
        node->requires_grad = true;
        node->inputs.reserve(inputs.size());
        for (auto& in : inputs) node->inputs.push_back(in.node_);
        node->backward = std::move(backward);
    }
    return Tensor(std::move(node));
}

void Tensor::backward(double seed) const {
    if (node_->value.size() != 1)
        throw DimensionError("backward() needs a scalar, got " + shape_str(node_->shape));
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a topological order.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->inputs.size()) {
            detail::Node* child = n->inputs[idx++].get();
            if (child->requires_grad && visited.insert(child).second)
                stack.emplace_back(child, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    node_->grad_buffer()[0] += seed;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(*n);
    }
    // Interior gradients are single-use; release them so a second backward
    // through a shared subgraph does not double count.
    for (detail::Node* n : order)
        if (n->backward) n->grad.clear();
}

double max_abs(const Tensor& x) {
    double m = 0.0;
    for (double v : x.data()) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(const Tensor& x) {
    return std::all_of(x.data().begin(), x.data().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace diva
