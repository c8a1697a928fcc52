// SPDX-License-Identifier: Apache-2.0
//
// Dense float64 tensors with a tape-free reverse-mode autodiff graph.
//
// Every op returns a fresh Tensor whose node remembers its inputs and a
// backward closure, but only when at least one input requires a gradient.
// Frozen weights (requires_grad == false) therefore cost nothing on the
// backward pass beyond the activation gradients that flow through them.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace diva {

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;

    std::vector<double>& grad_buffer() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

}  // namespace detail

class Tensor {
public:
    Tensor();

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                         bool requires_grad = false);
    static Tensor vector(std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor randn(Shape shape, double stddev, std::mt19937_64& rng,
                        bool requires_grad = false);

    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    // Rank-1 tensors read as a single row; rank-0 is never constructed.
    std::size_t rows() const;
    std::size_t cols() const;
    std::size_t size() const { return node_->value.size(); }
    bool empty() const { return node_->value.empty(); }

    std::span<const double> data() const { return node_->value; }
    double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
    double item() const;

    // Leaf mutation. Only optimizers and loaders call this; graph nodes
    // downstream of a leaf hold their own copies of any value they need.
    std::span<double> mutable_data() { return node_->value; }

    bool requires_grad() const { return node_->requires_grad; }
    // Leaves only; interior nodes keep the flag their inputs imply.
    void set_requires_grad(bool flag) { node_->requires_grad = flag; }
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad() { return node_->grad_buffer(); }
    void zero_grad() { node_->grad.clear(); }

    // Value copy with no graph history.
    Tensor detach(bool requires_grad = false) const;

    // Reverse pass from a scalar. Gradients accumulate into every reachable
    // node that requires grad, leaves included.
    void backward(double seed = 1.0) const;

    bool same_node(const Tensor& other) const { return node_ == other.node_; }
    bool bitwise_equal(const Tensor& other) const;

    // Used by op implementations.
    static Tensor make_result(Shape shape, std::vector<double> value,
                              std::vector<Tensor> inputs,
                              std::function<void(detail::Node&)> backward);
    detail::Node& node() const { return *node_; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;
};

// ---------------------------------------------------------------------------
// Differentiable ops. All of them treat rank-1 inputs as 1 x n rows.

Tensor matmul(const Tensor& a, const Tensor& b);
// a [p x q] times b^T where b is [r x q].
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// x [p x q] plus bias [q] on every row.
Tensor add_row(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& x, double c);
// x times a learnable 1-element tensor.
Tensor mul_scalar(const Tensor& x, const Tensor& s);
Tensor softmax_rows(const Tensor& x);
// Row i may only see columns j <= i + offset.
Tensor causal_softmax_rows(const Tensor& x, std::ptrdiff_t offset = 0);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
Tensor gelu(const Tensor& x);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& table, std::span<const int> ids);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Mean negative log-likelihood of targets over unmasked rows.
Tensor cross_entropy_logits(const Tensor& logits, std::span<const int> targets,
                            const std::vector<bool>& mask);

double max_abs(const Tensor& x);
bool all_finite(const Tensor& x);

}  // namespace diva
