// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "block.hpp"
#include "diva/nn.hpp"
#include "diva/resampler.hpp"

namespace diva::resampler {

namespace {

Tensor filled(std::size_t n, double v) { return Tensor::vector(std::vector<double>(n, v)); }

}  // namespace

void DivaConfig::validate() const {
    if (d < 2) throw ConfigError("diva: d must be at least 2");
    if (n_heads == 0 || d % n_heads != 0)
        throw ConfigError("diva: d=" + std::to_string(d) + " not divisible by n_heads=" +
                          std::to_string(n_heads));
    if (n_layers < 1) throw ConfigError("diva: n_layers must be at least 1");
    if (ffn_mult < 1) throw ConfigError("diva: ffn_mult must be at least 1");
    if (!(g0 >= 0.0)) throw ConfigError("diva: g0 must be non-negative");
    if (!(init_std >= 0.0)) throw ConfigError("diva: init_std must be non-negative");
}

namespace detail {

BlockParams init_block(const DivaConfig& config, double gate, std::mt19937_64& rng) {
    const std::size_t d = config.d, h = config.ffn_mult * config.d;
    BlockParams b;
    b.ln_q_gain = filled(d, 1.0);
    b.ln_q_bias = filled(d, 0.0);
    b.ln_m_gain = filled(d, 1.0);
    b.ln_m_bias = filled(d, 0.0);
    b.wq = Tensor::randn({d, d}, config.init_std, rng);
    b.wk = Tensor::randn({d, d}, config.init_std, rng);
    b.wv = Tensor::randn({d, d}, config.init_std, rng);
    b.wo = Tensor::randn({d, d}, config.init_std, rng);
    b.ln_f_gain = filled(d, 1.0);
    b.ln_f_bias = filled(d, 0.0);
    b.w1 = Tensor::randn({d, h}, config.init_std, rng);
    b.b1 = filled(h, 0.0);
    b.w2 = Tensor::randn({h, d}, config.init_std, rng);
    b.b2 = filled(d, 0.0);
    b.g_attn = Tensor::scalar(gate);
    b.g_ffn = Tensor::scalar(gate);
    return b;
}

void add_block(ParameterSet& ps, const std::string& prefix, const BlockParams& b,
               bool with_gates) {
    ps.add(prefix + "ln_q.gain", b.ln_q_gain);
    ps.add(prefix + "ln_q.bias", b.ln_q_bias);
    ps.add(prefix + "ln_m.gain", b.ln_m_gain);
    ps.add(prefix + "ln_m.bias", b.ln_m_bias);
    ps.add(prefix + "w_q", b.wq);
    ps.add(prefix + "w_k", b.wk);
    ps.add(prefix + "w_v", b.wv);
    ps.add(prefix + "w_o", b.wo);
    ps.add(prefix + "ln_f.gain", b.ln_f_gain);
    ps.add(prefix + "ln_f.bias", b.ln_f_bias);
    ps.add(prefix + "ffn.w1", b.w1);
    ps.add(prefix + "ffn.b1", b.b1);
    ps.add(prefix + "ffn.w2", b.w2);
    ps.add(prefix + "ffn.b2", b.b2);
    if (with_gates) {
        ps.add(prefix + "g_attn", b.g_attn);
        ps.add(prefix + "g_ffn", b.g_ffn);
    }
}

BlockParams clone_block(const BlockParams& b) {
    auto c = [](const Tensor& t) { return t.detach(t.requires_grad()); };
    return {c(b.ln_q_gain), c(b.ln_q_bias), c(b.ln_m_gain), c(b.ln_m_bias), c(b.wq),
            c(b.wk),        c(b.wv),        c(b.wo),        c(b.ln_f_gain), c(b.ln_f_bias),
            c(b.w1),        c(b.b1),        c(b.w2),        c(b.b2),        c(b.g_attn),
            c(b.g_ffn)};
}

}  // namespace detail

DivaParams init_diva(const DivaConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    DivaParams p;
    p.config = config;
    const double gate = config.gated ? config.g0 : 1.0;
    for (std::size_t l = 0; l < config.n_layers; ++l)
        p.layers.push_back(detail::init_block(config, gate, rng));
    return p;
}

ParameterSet DivaParams::parameters() const {
    ParameterSet ps;
    for (std::size_t l = 0; l < layers.size(); ++l)
        detail::add_block(ps, "layer" + std::to_string(l) + ".", layers[l], config.gated);
    return ps;
}

DivaParams DivaParams::clone() const {
    DivaParams out;
    out.config = config;
    for (const auto& b : layers) out.layers.push_back(detail::clone_block(b));
    return out;
}

Tensor build_memory(const Tensor& context, const Tensor& queries) {
    if (context.rows() == 0) return queries;
    if (context.cols() != queries.cols())
        throw DimensionError("build_memory: context " + shape_str(context.shape()) +
                             " vs queries " + shape_str(queries.shape()));
    return concat_rows({context, queries});
}

Tensor diva_layer(const Tensor& queries, const Tensor& context, const BlockParams& b,
                  std::size_t n_heads, std::size_t layer_index) {
    if (context.rows() > 0 && context.cols() != queries.cols())
        throw DimensionError("diva_layer: context " + shape_str(context.shape()) +
                             " vs queries " + shape_str(queries.shape()));
    const Tensor memory = build_memory(context, queries);
    const Tensor qn = layer_norm(queries, b.ln_q_gain, b.ln_q_bias);
    const Tensor mn = layer_norm(memory, b.ln_m_gain, b.ln_m_bias);
    const Tensor attn = nn::attention(qn, mn, b.wq, b.wk, b.wv, b.wo, n_heads, false);
    Tensor q = add(queries, mul_scalar(attn, b.g_attn));
    const Tensor ffn = nn::feed_forward(layer_norm(q, b.ln_f_gain, b.ln_f_bias), b.w1, b.b1, b.w2, b.b2);
    q = add(q, mul_scalar(ffn, b.g_ffn));
    if (!all_finite(q))
        throw NumericError("diva_layer: non-finite activation in layer " +
                           std::to_string(layer_index));
    return q;
}

Digest diva_forward(const Tensor& context, const Tensor& visual, const DivaParams& params) {
    if (visual.rows() == 0) throw DimensionError("diva_forward: need at least one visual token");
    if (visual.cols() != params.config.d)
        throw DimensionError("diva_forward: visual " + shape_str(visual.shape()) +
                             " vs model d=" + std::to_string(params.config.d));
    Tensor q = visual;
    for (std::size_t l = 0; l < params.layers.size(); ++l)
        q = diva_layer(q, context, params.layers[l], params.config.n_heads, l);
    return {q};
}

}  // namespace diva::resampler
