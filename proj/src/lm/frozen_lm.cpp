// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <algorithm>
#include <random>

#include "diva/lm.hpp"
#include "diva/nn.hpp"

namespace diva::lm {

namespace {


Tensor ones(std::size_t n) { return Tensor::vector(std::vector<double>(n, 1.0)); }
Tensor zeros(std::size_t n) { return Tensor::vector(std::vector<double>(n, 0.0)); }

template <class F>
void visit(const LmWeights& w, F&& f) {
    f("tok_emb", w.tok_emb);
    f("pos_emb", w.pos_emb);
    for (std::size_t l = 0; l < w.blocks.size(); ++l) {
        const auto& b = w.blocks[l];
        const std::string p = "block" + std::to_string(l) + ".";
        f(p + "ln1.gain", b.ln1_gain);
        f(p + "ln1.bias", b.ln1_bias);
        f(p + "w_q", b.wq);
        f(p + "w_k", b.wk);
        f(p + "w_v", b.wv);
        f(p + "w_o", b.wo);
        f(p + "ln2.gain", b.ln2_gain);
        f(p + "ln2.bias", b.ln2_bias);
        f(p + "ffn.w1", b.w1);
        f(p + "ffn.b1", b.b1);
        f(p + "ffn.w2", b.w2);
        f(p + "ffn.b2", b.b2);
    }
    f("lnf.gain", w.lnf_gain);
    f("lnf.bias", w.lnf_bias);
    f("head", w.head);
}

}  // namespace

std::size_t LmConfig::resolved_vocab() const {
    return vocab_size == 0 ? Vocab::standard().size() : vocab_size;
}

void LmConfig::validate() const {
    if (d < 2) throw ConfigError("lm: d must be at least 2");
    if (heads == 0 || d % heads != 0)
        throw ConfigError("lm: d=" + std::to_string(d) + " not divisible by heads=" +
                          std::to_string(heads));
    if (layers == 0) throw ConfigError("lm: need at least one layer");
    if (max_len == 0) throw ConfigError("lm: max_len must be positive");
    if (ffn_mult == 0) throw ConfigError("lm: ffn_mult must be positive");
    if (!(init_std >= 0.0)) throw ConfigError("lm: init_std must be non-negative");
}

double LmConfig::resolved_init_std() const {
    return init_std > 0.0 ? init_std : 1.0 / std::sqrt(static_cast<double>(d));
}

LmWeights LmWeights::init(const LmConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    const std::size_t d = config.d, h = config.ffn_mult * config.d, v = config.resolved_vocab();
    const double std_w = config.resolved_init_std();
    LmWeights w;
    w.config = config;
    w.tok_emb = Tensor::randn({v, d}, std_w, rng);
    w.pos_emb = Tensor::randn({config.max_len, d}, std_w, rng);
    for (std::size_t l = 0; l < config.layers; ++l) {
        LmBlock b;
        b.ln1_gain = ones(d);
        b.ln1_bias = zeros(d);
        b.wq = Tensor::randn({d, d}, std_w, rng);
        b.wk = Tensor::randn({d, d}, std_w, rng);
        b.wv = Tensor::randn({d, d}, std_w, rng);
        b.wo = Tensor::randn({d, d}, std_w, rng);
        b.ln2_gain = ones(d);
        b.ln2_bias = zeros(d);
        b.w1 = Tensor::randn({d, h}, std_w, rng);
        b.b1 = zeros(h);
        b.w2 = Tensor::randn({h, d}, std_w, rng);
        b.b2 = zeros(d);
        w.blocks.push_back(std::move(b));
    }
    w.lnf_gain = ones(d);
    w.lnf_bias = zeros(d);
    w.head = Tensor::randn({d, v}, std_w, rng);
    return w;
}

ParameterSet LmWeights::parameters() const {
    ParameterSet ps;
    visit(*this, [&](const std::string& name, const Tensor& t) { ps.add(name, t); });
    return ps;
}

LmWeights LmWeights::from_parameters(const LmConfig& config, const ParameterSet& params) {
    LmWeights w = init(config, 0);
    ParameterSet mine = w.parameters();
    mine.assign_from(params);
    return w;
}

FrozenLm::FrozenLm(const LmWeights& weights) {
    w_ = LmWeights::from_parameters(weights.config, weights.parameters());
    for (auto& p : w_.parameters().items()) {
        Tensor t = p.tensor;
        t.set_requires_grad(false);
    }
}

Tensor embed_tokens(std::span<const int> tokens, const LmWeights& lm, std::size_t offset) {
    const std::size_t d = lm.config.d;
    if (tokens.empty()) return Tensor::zeros({0, d});
    if (offset + tokens.size() > lm.config.max_len)
        throw LengthError("embed_tokens: positions " + std::to_string(offset) + ".." +
                          std::to_string(offset + tokens.size()) + " exceed max_len " +
                          std::to_string(lm.config.max_len));
    return add(gather_rows(lm.tok_emb, tokens),
               slice_rows(lm.pos_emb, offset, offset + tokens.size()));
}

Tensor lm_forward(const Tensor& prefix, std::span<const int> tokens, const LmWeights& lm) {
    const auto& cfg = lm.config;
    const std::size_t n = prefix.rows();
    if (!prefix.empty() && prefix.cols() != cfg.d)
        throw DimensionError("lm_forward: prefix width " + std::to_string(prefix.cols()) +
                             " vs model d=" + std::to_string(cfg.d));
    if (n + tokens.size() > cfg.max_len)
        throw LengthError("lm_forward: sequence of " + std::to_string(n + tokens.size()) +
                          " exceeds max_len " + std::to_string(cfg.max_len));
    if (tokens.empty()) throw DimensionError("lm_forward: no token positions to score");

    Tensor x = embed_tokens(tokens, lm, n);
    if (n > 0) x = concat_rows({prefix, x});
    for (const auto& b : lm.blocks) {
        const Tensor h = layer_norm(x, b.ln1_gain, b.ln1_bias);
        x = add(x, nn::attention(h, h, b.wq, b.wk, b.wv, b.wo, cfg.heads, true));
        const Tensor h2 = layer_norm(x, b.ln2_gain, b.ln2_bias);
        x = add(x, nn::feed_forward(h2, b.w1, b.b1, b.w2, b.b2));
    }
    const Tensor tok_rows = n > 0 ? slice_rows(x, n, x.rows()) : x;
    return matmul(layer_norm(tok_rows, lm.lnf_gain, lm.lnf_bias), lm.head);
}

Tensor prefix_target_loss(const Tensor& prefix, std::span<const int> prompt,
                          std::span<const int> target, const LmWeights& lm) {
    if (target.empty()) throw NumericError("prefix_target_loss: empty target");
    const int sep = Vocab::standard().sep();
    std::vector<int> input;
    input.reserve(1 + prompt.size() + target.size());
    input.push_back(sep);
    input.insert(input.end(), prompt.begin(), prompt.end());
    input.insert(input.end(), target.begin(), target.end() - 1);

    const std::size_t a = prompt.size();
    std::vector<int> next(input.size());
    std::vector<bool> mask(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        next[i] = i < a ? prompt[i] : target[i - a];
        mask[i] = i >= a;
    }
    return cross_entropy_logits(lm_forward(prefix, input, lm), next, mask);
}

std::vector<int> greedy_decode(const FrozenLm& lm, const Tensor& prefix,
                               std::span<const int> prompt, std::size_t max_new) {
    const auto& vocab = Vocab::standard();
    std::vector<int> seq;
    seq.push_back(vocab.sep());
    seq.insert(seq.end(), prompt.begin(), prompt.end());
    std::vector<int> out;
    const Tensor frozen_prefix = prefix.requires_grad() ? prefix.detach() : prefix;
    for (std::size_t step = 0; step < max_new; ++step) {
        const Tensor logits = lm_forward(frozen_prefix, seq, lm.weights());
        const std::size_t v = logits.cols();
        const auto last = logits.data().subspan((logits.rows() - 1) * v, v);
        // max_element returns the first maximum, i.e. the lowest id on ties.
        const int next = static_cast<int>(std::max_element(last.begin(), last.end()) - last.begin());
        if (next == vocab.eos()) break;
        out.push_back(next);
        seq.push_back(next);
    }
    return out;
}

Tensor example_loss(const LmExample& ex, const LmWeights& lm) {
    const std::size_t n = ex.soft_prefix.empty() ? 0 : ex.soft_prefix.rows();
    Tensor prefix = n > 0 ? ex.soft_prefix : Tensor::zeros({0, lm.config.d});
    if (!ex.context.empty()) {
        const Tensor ctx = embed_tokens(ex.context, lm, n);
        prefix = n > 0 ? concat_rows({prefix, ctx}) : ctx;
    }
    return prefix_target_loss(prefix, ex.prompt, ex.target, lm);
}

}  // namespace diva::lm
