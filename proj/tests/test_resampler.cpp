// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "diva/nn.hpp"
#include "diva/resampler.hpp"
#include "oracle.hpp"

using namespace diva;
using namespace diva::resampler;

namespace {

DivaConfig micro(std::size_t d = 8, std::size_t layers = 2, std::size_t heads = 2) {
    DivaConfig c;
    c.d = d;
    c.n_layers = layers;
    c.n_heads = heads;
    return c;
}

void set_gates(DivaParams& p, double attn, double ffn) {
    for (auto& b : p.layers) {
        b.g_attn.mutable_data()[0] = attn;
        b.g_ffn.mutable_data()[0] = ffn;
    }
}

double sup(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_CASE("init: gate values and determinism") {
    DivaConfig c = micro();
    c.g0 = 1e-3;
    const DivaParams p = init_diva(c, 4);
    for (const auto& b : p.layers) {
        CHECK(b.g_attn.item() == 1e-3);
        CHECK(b.g_ffn.item() == 1e-3);
    }
    c.g0 = 0.0;
    for (const auto& b : init_diva(c, 4).layers) {
        CHECK(b.g_attn.item() == 0.0);
        CHECK(b.g_ffn.item() == 0.0);
    }
    CHECK(init_diva(micro(), 9).parameters().bitwise_equal(init_diva(micro(), 9).parameters()));
    CHECK_FALSE(init_diva(micro(), 9).parameters().bitwise_equal(init_diva(micro(), 10).parameters()));
}

TEST_CASE("ungated parameters omit the gates") {
    DivaConfig c = micro();
    c.gated = false;
    const DivaParams p = init_diva(c, 1);
    CHECK_FALSE(p.parameters().contains("layer0.g_attn"));
    CHECK(p.layers[0].g_attn.item() == 1.0);
    CHECK(init_diva(micro(), 1).parameters().contains("layer1.g_ffn"));
}

TEST_CASE("config validation") {
    DivaConfig c = micro();
    c.n_heads = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = micro();
    c.n_layers = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = micro();
    c.g0 = std::nan("");
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("memory construction") {
    std::mt19937_64 rng(1);
    const Tensor ctx = Tensor::randn({10, 8}, 1.0, rng);
    const Tensor q = Tensor::randn({4, 8}, 1.0, rng);
    const Tensor m = build_memory(ctx, q);
    CHECK(m.rows() == 14);
    CHECK(m.cols() == 8);
    CHECK(build_memory(Tensor::zeros({0, 8}), q).bitwise_equal(q));

    const Tensor c1 = Tensor::matrix(1, 3, {1, 2, 3});
    const Tensor q1 = Tensor::matrix(1, 3, {4, 5, 6});
    const Tensor m1 = build_memory(c1, q1);
    CHECK(std::vector<double>(m1.data().begin(), m1.data().end()) == std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("zero gates give the identity bitwise") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        DivaParams p = init_diva(micro(8, 1 + trial % 3), 100 + trial);
        set_gates(p, 0.0, 0.0);
        const Tensor v = Tensor::randn({1 + std::size_t(trial % 5), 8}, 3.0, rng);
        const Tensor c = Tensor::randn({std::size_t(trial % 7), 8}, 3.0, rng);
        CHECK(diva_forward(c, v, p).vectors.bitwise_equal(v));
        CHECK(diva_layer(v, c, p.layers[0], 2).bitwise_equal(v));
    }
}

TEST_CASE("near identity at g0 = 1e-3") {
    // Deviation per block is g0 times the branch output; at init_std 0.02 the
    // branches stay well below 1 while |V| has unit scale, so 0.05 is loose.
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const DivaParams p = init_diva(micro(), 200 + trial);
        const Tensor v = Tensor::randn({5, 8}, 1.0, rng);
        const Tensor c = Tensor::randn({9, 8}, 1.0, rng);
        const Tensor dgst = diva_forward(c, v, p).vectors;
        CHECK(sup(sub(dgst, v).data()) / sup(v.data()) < 0.05);
    }
}

TEST_CASE("digest length equals the number of visual tokens") {
    std::mt19937_64 rng(4);
    const DivaParams p = init_diva(micro(), 5);
    for (auto [n, m] : {std::pair{6, 12}, {1, 0}, {3, 40}, {16, 32}}) {
        const Tensor v = Tensor::randn({std::size_t(n), 8}, 1.0, rng);
        const Tensor c = Tensor::randn({std::size_t(m), 8}, 1.0, rng);
        CHECK(diva_forward(c, v, p).vectors.rows() == std::size_t(n));
    }
    CHECK_THROWS_AS(diva_forward(Tensor::zeros({2, 8}), Tensor::zeros({0, 8}), p), DimensionError);
    CHECK_THROWS_AS(diva_forward(Tensor::zeros({2, 8}), Tensor::zeros({2, 4}), p), DimensionError);
}

TEST_CASE("permuting the context rows leaves the digest unchanged") {
    std::mt19937_64 rng(6);
    DivaParams p = init_diva(micro(), 7);
    set_gates(p, 0.7, 0.4);
    const Tensor v = Tensor::randn({3, 8}, 1.0, rng);
    const Tensor c = Tensor::randn({5, 8}, 1.0, rng);
    const std::vector<int> perm{3, 0, 4, 1, 2};
    const Tensor cp = gather_rows(c, perm);
    const auto a = oracle::values(diva_forward(c, v, p).vectors);
    const auto b = oracle::values(diva_forward(cp, v, p).vectors);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("single-head block matches a hand evaluation") {
    // d = 2, one query, one context row. LayerNorm of a 2-vector [a, b] is
    // [s, -s] * sign(a - b) with s = 1/sqrt(1 + eps / ((a-b)/2)^2).
    DivaConfig c = micro(2, 1, 1);
    c.ffn_mult = 1;
    DivaParams p = init_diva(c, 1);
    BlockParams& b = p.layers[0];
    auto fill = [](Tensor& t, std::vector<double> v) { std::copy(v.begin(), v.end(), t.mutable_data().begin()); };
    fill(b.wq, {1, 0, 0, 1});
    fill(b.wk, {1, 0, 0, 1});
    fill(b.wv, {2, 0, 0, 1});
    fill(b.wo, {1, 0, 0, 1});
    fill(b.w1, {0, 0, 0, 0});
    fill(b.w2, {0, 0, 0, 0});
    fill(b.b2, {0.5, -0.25});
    b.g_attn.mutable_data()[0] = 0.3;
    b.g_ffn.mutable_data()[0] = 0.1;

    const Tensor v = Tensor::matrix(1, 2, {3.0, 1.0});
    const Tensor ctx = Tensor::matrix(1, 2, {0.0, 2.0});
    const double eps = 1e-5;
    auto ln = [&](double a, double bb) {
        const double mu = (a + bb) / 2, var = ((a - mu) * (a - mu) + (bb - mu) * (bb - mu)) / 2;
        const double inv = 1.0 / std::sqrt(var + eps);
        return std::pair{(a - mu) * inv, (bb - mu) * inv};
    };
    const auto [q0, q1] = ln(3.0, 1.0);
    const auto [c0, c1] = ln(0.0, 2.0);
    // Memory = [ctx; v]; keys equal values' pre-images under identity wk.
    const double s_ctx = (q0 * c0 + q1 * c1) / std::sqrt(2.0);
    const double s_self = (q0 * q0 + q1 * q1) / std::sqrt(2.0);
    const double mx = std::max(s_ctx, s_self);
    const double w_ctx = std::exp(s_ctx - mx), w_self = std::exp(s_self - mx);
    const double a_ctx = w_ctx / (w_ctx + w_self), a_self = w_self / (w_ctx + w_self);
    const double att0 = 2.0 * (a_ctx * c0 + a_self * q0);
    const double att1 = 1.0 * (a_ctx * c1 + a_self * q1);
    const double out0 = 3.0 + 0.3 * att0 + 0.1 * 0.5;
    const double out1 = 1.0 + 0.3 * att1 + 0.1 * -0.25;

    const Tensor got = diva_forward(ctx, v, p).vectors;
    CHECK(got.at(0, 0) == doctest::Approx(out0).epsilon(1e-12));
    CHECK(got.at(0, 1) == doctest::Approx(out1).epsilon(1e-12));
}

TEST_CASE("zeroing one gate removes exactly that branch") {
    std::mt19937_64 rng(8);
    DivaParams p = init_diva(micro(8, 1), 9);
    set_gates(p, 0.0, 0.6);
    const Tensor v = Tensor::randn({4, 8}, 1.0, rng);
    const Tensor c = Tensor::randn({6, 8}, 1.0, rng);
    const BlockParams& b = p.layers[0];
    // Without the attention branch the block is V + g_ffn FFN(LN_f(V)).
    const Tensor ref = add(v, scale(nn::feed_forward(layer_norm(v, b.ln_f_gain, b.ln_f_bias), b.w1, b.b1, b.w2, b.b2), 0.6));
    CHECK(diva_forward(c, v, p).vectors.bitwise_equal(ref));
}

TEST_CASE("gradients reach every parameter including the gates") {
    std::mt19937_64 rng(10);
    std::vector<bool> touched;
    for (int seed = 0; seed < 10; ++seed) {
        DivaParams p = init_diva(micro(), 300 + seed);
        ParameterSet ps = p.parameters();
        ps.set_requires_grad(true);
        const Tensor v = Tensor::randn({3, 8}, 1.0, rng);
        const Tensor c = Tensor::randn({5, 8}, 1.0, rng);
        const Tensor mix = Tensor::randn({8, 2}, 1.0, rng);
        sum(gelu(matmul(diva_forward(c, v, p).vectors, mix))).backward();
        touched.resize(ps.size(), false);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const auto& t = ps.items()[i].tensor;
            if (t.has_grad())
                for (double g : t.grad()) touched[i] = touched[i] || g != 0.0;
        }
    }
    for (std::size_t i = 0; i < touched.size(); ++i) CHECK(touched[i]);
}

TEST_CASE("diva gradient matches central differences on a micro config") {
    std::mt19937_64 rng(11);
    DivaConfig cfg = micro(8, 2, 2);
    cfg.g0 = 0.3;
    cfg.init_std = 0.3;
    DivaParams p = init_diva(cfg, 12);
    const Tensor v = Tensor::randn({3, 8}, 1.0, rng);
    const Tensor c = Tensor::randn({4, 8}, 1.0, rng);
    const Tensor mix = Tensor::randn({8, 3}, 1.0, rng);
    auto loss = [&] { return sum(gelu(matmul(diva_forward(c, v, p).vectors, mix))); };
    ParameterSet ps = p.parameters();
    ps.set_requires_grad(true);
    double worst = 0.0;
    for (auto& item : ps.items()) {
        const auto ad = oracle::autodiff(loss, item.tensor);
        const auto fd = oracle::central_diff([&] { return loss().item(); }, item.tensor);
        worst = std::max(worst, oracle::max_rel_err(ad, fd, 1e-4));
    }
    CHECK(worst < 1e-4);
}

// ---------------------------------------------------------------------------

TEST_CASE("adapter") {
    std::mt19937_64 rng(13);
    AdapterParams p = init_adapter(8, 16, 1);
    const Tensor x = Tensor::randn({3, 8}, 1.0, rng);
    CHECK(adapter_forward(x, p).rows() == 3);

    AdapterParams zero = init_adapter(8, 16, 1, 0.0);
    CHECK(adapter_forward(x, zero).bitwise_equal(x));

    const std::vector<int> perm{2, 0, 1};
    const auto a = oracle::values(adapter_forward(gather_rows(x, perm), p));
    const auto b = oracle::values(gather_rows(adapter_forward(x, p), perm));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    AdapterParams big = init_adapter(8, 16, 2, 0.5);
    ParameterSet ps = big.parameters();
    ps.set_requires_grad(true);
    const Tensor mix = Tensor::randn({8, 2}, 1.0, rng);
    auto loss = [&] { return sum(gelu(matmul(adapter_forward(x, big), mix))); };
    double worst = 0.0;
    for (auto& item : ps.items()) {
        const auto ad = oracle::autodiff(loss, item.tensor);
        const auto fd = oracle::central_diff([&] { return loss().item(); }, item.tensor);
        worst = std::max(worst, oracle::max_rel_err(ad, fd, 1e-4));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("fixed resampler always returns K rows") {
    std::mt19937_64 rng(14);
    DivaConfig c = micro();
    const FixedResamplerParams p = init_fixed_resampler(c, kDefaultFixedQueries, 3);
    CHECK(p.k() == 128);
    for (std::size_t t : {0, 1, 50, 500}) {
        const Tensor out = fixed_resampler_forward(Tensor::randn({t, 8}, 1.0, rng), p);
        CHECK(out.rows() == 128);
        CHECK(all_finite(out));
    }
    CHECK_FALSE(p.parameters().contains("layer0.g_attn"));
}

TEST_CASE("fixed resampler with one query matches a hand evaluation") {
    // With wv = wo = 0 the attention branch vanishes; the FFN with zero w1
    // reduces to b2, so the output is query + b2.
    DivaConfig c = micro(2, 1, 1);
    c.ffn_mult = 1;
    FixedResamplerParams p = init_fixed_resampler(c, 1, 4);
    auto fill = [](Tensor& t, std::vector<double> v) { std::copy(v.begin(), v.end(), t.mutable_data().begin()); };
    fill(p.queries, {0.5, -1.5});
    auto& b = p.layers[0];
    fill(b.wv, {0, 0, 0, 0});
    fill(b.w1, {0, 0, 0, 0});
    fill(b.b2, {1.0, 2.0});
    const Tensor out = fixed_resampler_forward(Tensor::matrix(1, 2, {7.0, 8.0}), p);
    CHECK(out.at(0, 0) == doctest::Approx(1.5));
    CHECK(out.at(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("direct concatenation order") {
    std::mt19937_64 rng(15);
    const Tensor v = Tensor::randn({4, 8}, 1.0, rng);
    const Tensor t = Tensor::randn({10, 8}, 1.0, rng);
    const Tensor vf = direct_concat(v, t, ConcatOrder::VisionFirst);
    const Tensor tf = direct_concat(v, t, ConcatOrder::TextFirst);
    CHECK(vf.rows() == 14);
    CHECK(tf.rows() == 14);
    CHECK(slice_rows(vf, 0, 4).bitwise_equal(v));
    CHECK(slice_rows(tf, 0, 10).bitwise_equal(t));
    CHECK(slice_rows(tf, 10, 14).bitwise_equal(v));
}
