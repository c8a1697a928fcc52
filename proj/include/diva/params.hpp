// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "diva/tensor.hpp"

namespace diva {

struct Parameter {
    std::string name;  // dotted path, e.g. "layer0.g_attn"
    Tensor tensor;
};

// Ordered, name-unique collection of trainable (or frozen) tensors. Order is
// insertion order and fixes every reduction the optimizer performs.
class ParameterSet {
public:
    // Returns the stored tensor; throws ConfigError on duplicate names.
    Tensor add(std::string name, Tensor tensor);

    const std::vector<Parameter>& items() const { return items_; }
    std::vector<Parameter>& items() { return items_; }
    std::size_t size() const { return items_.size(); }
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::size_t scalar_count() const;

    void zero_grad();
    void set_requires_grad(bool flag);

    // Deep copy: same names, fresh tensors.
    ParameterSet clone() const;
    bool bitwise_equal(const ParameterSet& other) const;
    // Copies values from other; names and shapes must match.
    void assign_from(const ParameterSet& other);

    // FNV-1a 64 over names, shapes and raw value bytes.
    std::uint64_t hash() const;

private:
    std::vector<Parameter> items_;
};

std::string hash_hex(std::uint64_t h);

struct AdamState {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

AdamState make_adam(const ParameterSet& params, double lr);

// One Adam update with bias correction over every parameter. Each parameter
// must carry a gradient buffer (a zero buffer is fine); a missing buffer
// raises NumericError naming the parameter.
void adam_step(ParameterSet& params, AdamState& state);

// Sum of squared gradient entries, in parameter order.
double grad_norm_sq(const ParameterSet& params);
void scale_grads(ParameterSet& params, double c);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every entry of x.
// x is perturbed in place and restored before returning.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, Tensor& x,
                        double h = 1e-5);

}  // namespace diva
