// SPDX-License-Identifier: Apache-2.0
//
// Visual-anchor resampler and the baseline context pipelines.
//
// The resampler starts from the visual tokens, Q0 = V, and refines them
// through N pre-norm cross-attention blocks. At every layer the key/value
// memory is the text context followed by the current queries,
// M = [C; Q], and each residual branch is scaled by a learnable scalar gate:
//
//   Q <- Q + g_attn * CrossAttn(LN_q(Q), LN_m(M), LN_m(M))
//   Q <- Q + g_ffn  * FFN(LN_f(Q))
//
// With both gates at zero a block is exactly the identity, so a small
// initial gate keeps the digest close to V early in training. The output
// digest has exactly as many rows as V.

#pragma once

#include <cstdint>
#include <optional>

#include "diva/params.hpp"

namespace diva::resampler {

struct DivaConfig {
    std::size_t d = 64;
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t ffn_mult = 4;
    double g0 = 1e-3;
    // Std of the normal draw for projections, FFN weights and fixed queries.
    double init_std = 0.02;
    // false: gates are the constant 1 and are not trainable.
    bool gated = true;

    void validate() const;
};

struct BlockParams {
    Tensor ln_q_gain, ln_q_bias;
    Tensor ln_m_gain, ln_m_bias;
    Tensor wq, wk, wv, wo;
    Tensor ln_f_gain, ln_f_bias;
    Tensor w1, b1, w2, b2;
    Tensor g_attn, g_ffn;
};

struct DivaParams {
    DivaConfig config;
    std::vector<BlockParams> layers;

    // Named handles sharing storage. Gates are included only when gated.
    ParameterSet parameters() const;
    DivaParams clone() const;
};

struct Digest {
    Tensor vectors;  // n x d, n = rows of V
};

DivaParams init_diva(const DivaConfig& config, std::uint64_t seed);

// [C; Q] as one (m + n) x d matrix.
Tensor build_memory(const Tensor& context, const Tensor& queries);

// One gated block. layer_index only labels errors.
Tensor diva_layer(const Tensor& queries, const Tensor& context, const BlockParams& block,
                  std::size_t n_heads, std::size_t layer_index = 0);

Digest diva_forward(const Tensor& context, const Tensor& visual, const DivaParams& params);

// ---------------------------------------------------------------------------
// Baselines.

struct AdapterParams {
    std::size_t d = 0;
    Tensor w1, b1, w2, b2;  // d x h, h, h x d, d

    ParameterSet parameters() const;
    AdapterParams clone() const;
};

AdapterParams init_adapter(std::size_t d, std::size_t hidden, std::uint64_t seed,
                           double init_std = 0.02);

// X + W2 gelu(X W1 + b1) + b2, row by row.
Tensor adapter_forward(const Tensor& x, const AdapterParams& params);

struct FixedResamplerParams {
    DivaConfig config;  // block shape; gates are fixed at 1
    Tensor queries;     // K x d
    std::vector<BlockParams> layers;

    std::size_t k() const { return queries.rows(); }
    ParameterSet parameters() const;
    FixedResamplerParams clone() const;
};

inline constexpr std::size_t kDefaultFixedQueries = 128;

FixedResamplerParams init_fixed_resampler(const DivaConfig& config, std::size_t k,
                                          std::uint64_t seed);

// K output rows regardless of the number of input rows.
Tensor fixed_resampler_forward(const Tensor& x, const FixedResamplerParams& params);

enum class ConcatOrder { VisionFirst, TextFirst };

Tensor direct_concat(const Tensor& visual, const Tensor& text, ConcatOrder order);

}  // namespace diva::resampler
