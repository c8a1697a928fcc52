// SPDX-License-Identifier: Apache-2.0
//
// Composite layers shared by the language model and the resamplers.

#pragma once

#include "diva/tensor.hpp"

namespace diva::nn {

// x W + b
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Multi-head scaled dot-product attention. Queries come from q_in, keys and
// values from kv_in; each head sees d / heads columns and is scaled by
// 1 / sqrt(d / heads). With causal set, query row i sees kv rows <= i.
Tensor attention(const Tensor& q_in, const Tensor& kv_in, const Tensor& wq, const Tensor& wk,
                 const Tensor& wv, const Tensor& wo, std::size_t heads, bool causal);

// W2 gelu(x W1 + b1) + b2
Tensor feed_forward(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                    const Tensor& b2);

}  // namespace diva::nn
