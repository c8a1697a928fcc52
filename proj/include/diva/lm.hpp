// SPDX-License-Identifier: Apache-2.0
//
// Tiny pre-norm causal decoder. It is pretrained once, frozen, and then
// consumes soft-embedding prefixes produced by the fusion modules.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "diva/params.hpp"
#include "diva/vocab.hpp"

namespace diva::lm {

struct LmConfig {
    std::size_t d = 64;
    std::size_t layers = 4;
    std::size_t heads = 4;
    std::size_t ffn_mult = 4;
    std::size_t max_len = 512;
    std::size_t vocab_size = 0;  // 0 means "size of the standard vocab"
    // Weight and embedding init std; 0 selects 1/sqrt(d).
    double init_std = 0.0;

    double resolved_init_std() const;

    void validate() const;
    std::size_t resolved_vocab() const;
};

struct LmBlock {
    Tensor ln1_gain, ln1_bias;
    Tensor wq, wk, wv, wo;
    Tensor ln2_gain, ln2_bias;
    Tensor w1, b1, w2, b2;
};

struct LmWeights {
    LmConfig config;
    Tensor tok_emb;  // vocab x d
    Tensor pos_emb;  // max_len x d
    std::vector<LmBlock> blocks;
    Tensor lnf_gain, lnf_bias;
    Tensor head;  // d x vocab

    static LmWeights init(const LmConfig& config, std::uint64_t seed);
    // Named handles sharing storage with this struct.
    ParameterSet parameters() const;
    static LmWeights from_parameters(const LmConfig& config, const ParameterSet& params);
};

// Immutable snapshot. Every weight has requires_grad == false, so gradients
// flow through its activations into a prefix but never accumulate on it.
class FrozenLm {
public:
    explicit FrozenLm(const LmWeights& weights);

    const LmWeights& weights() const { return w_; }
    const LmConfig& config() const { return w_.config; }
    ParameterSet parameters() const { return w_.parameters(); }
    std::uint64_t hash() const { return w_.parameters().hash(); }

private:
    LmWeights w_;
};

class LengthError : public std::length_error {
public:
    using std::length_error::length_error;
};

// Row i = token embedding + positional embedding at offset + i.
Tensor embed_tokens(std::span<const int> tokens, const LmWeights& lm, std::size_t offset = 0);
inline Tensor embed_tokens(std::span<const int> tokens, const FrozenLm& lm,
                           std::size_t offset = 0) {
    return embed_tokens(tokens, lm.weights(), offset);
}

// Causal pass over [prefix; embedded tokens]. Prefix rows enter as given;
// token j gets position prefix.rows() + j. Returns logits for token rows only.
Tensor lm_forward(const Tensor& prefix, std::span<const int> tokens, const LmWeights& lm);
inline Tensor lm_forward(const Tensor& prefix, std::span<const int> tokens, const FrozenLm& lm) {
    return lm_forward(prefix, tokens, lm.weights());
}

// Mean NLL of target given [prefix; <sep>; prompt; target_{<t}]. Prompt
// positions are masked out of the loss.
Tensor prefix_target_loss(const Tensor& prefix, std::span<const int> prompt,
                          std::span<const int> target, const LmWeights& lm);

// Argmax decoding after [prefix; <sep>; prompt]; ties go to the lowest id.
// Stops on <eos> (not included in the result) or after max_new tokens.
std::vector<int> greedy_decode(const FrozenLm& lm, const Tensor& prefix,
                               std::span<const int> prompt, std::size_t max_new);

// One pretraining example: optional soft prefix rows (e.g. visual features),
// then context tokens embedded by the LM itself, then <sep> prompt target.
struct LmExample {
    Tensor soft_prefix;
    std::vector<int> context;
    std::vector<int> prompt;
    std::vector<int> target;
};

Tensor example_loss(const LmExample& ex, const LmWeights& lm);

struct PretrainConfig {
    std::size_t steps = 8000;
    std::size_t batch = 16;
    double lr = 1e-3;
    std::size_t warmup = 100;
    double max_grad_norm = 1.0;
    std::size_t log_every = 50;
    std::uint64_t seed = 0;
};

struct PretrainLog {
    std::vector<std::pair<std::size_t, double>> train_curve;
    double heldout_loss_start = 0.0;
    double heldout_loss_end = 0.0;
};

// Trains every LM weight on corpus and returns the frozen snapshot. Aborts
// with NumericError (seed and step in the message) if the loss turns NaN.
FrozenLm pretrain_lm(std::span<const LmExample> corpus, std::span<const LmExample> heldout,
                     const LmConfig& config, const PretrainConfig& train,
                     PretrainLog* log = nullptr,
                     const std::function<void(std::size_t, double)>& on_log = {});

double mean_loss(std::span<const LmExample> examples, const LmWeights& lm);

}  // namespace diva::lm
