// SPDX-License-Identifier: Apache-2.0

#include "diva/nn.hpp"

#include <cmath>

namespace diva::nn {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_row(matmul(x, w), b);
}

Tensor attention(const Tensor& q_in, const Tensor& kv_in, const Tensor& wq, const Tensor& wk,
                 const Tensor& wv, const Tensor& wo, std::size_t heads, bool causal) {
    const std::size_t d = wq.cols();
    if (heads == 0 || d % heads != 0)
        throw ConfigError("attention: width " + std::to_string(d) + " not divisible by " +
                          std::to_string(heads) + " heads");
    const std::size_t dh = d / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    const Tensor q = matmul(q_in, wq);
    const Tensor k = matmul(kv_in, wk);
    const Tensor v = matmul(kv_in, wv);
    std::vector<Tensor> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const Tensor qh = heads == 1 ? q : slice_cols(q, h * dh, (h + 1) * dh);
        const Tensor kh = heads == 1 ? k : slice_cols(k, h * dh, (h + 1) * dh);
        const Tensor vh = heads == 1 ? v : slice_cols(v, h * dh, (h + 1) * dh);
        const Tensor scores = scale(matmul_nt(qh, kh), inv_sqrt);
        const Tensor probs = causal ? causal_softmax_rows(scores) : softmax_rows(scores);
        outs.push_back(matmul(probs, vh));
    }
    const Tensor merged = heads == 1 ? outs.front() : concat_cols(outs);
    return matmul(merged, wo);
}

Tensor feed_forward(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                    const Tensor& b2) {
    return linear(gelu(linear(x, w1, b1)), w2, b2);
}

}  // namespace diva::nn
