// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "block.hpp"
#include "diva/nn.hpp"
#include "diva/resampler.hpp"

namespace diva::resampler {

AdapterParams init_adapter(std::size_t d, std::size_t hidden, std::uint64_t seed,
                           double init_std) {
    if (d == 0 || hidden == 0) throw ConfigError("adapter: d and hidden must be positive");
    std::mt19937_64 rng(seed);
    AdapterParams p;
    p.d = d;
    p.w1 = Tensor::randn({d, hidden}, init_std, rng);
    p.b1 = Tensor::zeros({hidden});
    p.w2 = Tensor::randn({hidden, d}, init_std, rng);
    p.b2 = Tensor::zeros({d});
    return p;
}

ParameterSet AdapterParams::parameters() const {
    ParameterSet ps;
    ps.add("adapter.w1", w1);
    ps.add("adapter.b1", b1);
    ps.add("adapter.w2", w2);
    ps.add("adapter.b2", b2);
    return ps;
}

AdapterParams AdapterParams::clone() const {
    auto c = [](const Tensor& t) { return t.detach(t.requires_grad()); };
    return {d, c(w1), c(b1), c(w2), c(b2)};
}

Tensor adapter_forward(const Tensor& x, const AdapterParams& params) {
    if (x.cols() != params.d)
        throw DimensionError("adapter_forward: input " + shape_str(x.shape()) +
                             " vs adapter d=" + std::to_string(params.d));
    if (x.rows() == 0) return x;
    return add(x, nn::feed_forward(x, params.w1, params.b1, params.w2, params.b2));
}

FixedResamplerParams init_fixed_resampler(const DivaConfig& config, std::size_t k,
                                          std::uint64_t seed) {
    config.validate();
    if (k == 0) throw ConfigError("fixed resampler: K must be positive");
    std::mt19937_64 rng(seed);
    FixedResamplerParams p;
    p.config = config;
    p.config.gated = false;
    p.queries = Tensor::randn({k, config.d}, config.init_std, rng);
    for (std::size_t l = 0; l < config.n_layers; ++l)
        p.layers.push_back(detail::init_block(p.config, 1.0, rng));
    return p;
}

ParameterSet FixedResamplerParams::parameters() const {
    ParameterSet ps;
    ps.add("queries", queries);
    for (std::size_t l = 0; l < layers.size(); ++l)
        detail::add_block(ps, "layer" + std::to_string(l) + ".", layers[l], false);
    return ps;
}

FixedResamplerParams FixedResamplerParams::clone() const {
    FixedResamplerParams out;
    out.config = config;
    out.queries = queries.detach(queries.requires_grad());
    for (const auto& b : layers) out.layers.push_back(detail::clone_block(b));
    return out;
}

Tensor fixed_resampler_forward(const Tensor& x, const FixedResamplerParams& params) {
    if (x.rows() > 0 && x.cols() != params.config.d)
        throw DimensionError("fixed_resampler_forward: input " + shape_str(x.shape()) +
                             " vs d=" + std::to_string(params.config.d));
    Tensor q = params.queries;
    for (std::size_t l = 0; l < params.layers.size(); ++l)
        q = diva_layer(q, x, params.layers[l], params.config.n_heads, l);
    return q;
}

Tensor direct_concat(const Tensor& visual, const Tensor& text, ConcatOrder order) {
    if (visual.rows() > 0 && text.rows() > 0 && visual.cols() != text.cols())
        throw DimensionError("direct_concat: visual " + shape_str(visual.shape()) + " vs text " +
                             shape_str(text.shape()));
    if (visual.rows() == 0) return text;
    if (text.rows() == 0) return visual;
    return order == ConcatOrder::VisionFirst ? concat_rows({visual, text})
                                             : concat_rows({text, visual});
}

}  // namespace diva::resampler
