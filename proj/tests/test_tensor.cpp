// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "diva/checkpoint.hpp"
#include "diva/nn.hpp"
#include "diva/params.hpp"
#include "oracle.hpp"

using namespace diva;

namespace {

// Scalar readout that weights every output entry differently: sum of a
// random mixing of the columns passed through a smooth nonlinearity.
Tensor readout(const Tensor& out, const Tensor& mix) { return sum(gelu(matmul(out, mix))); }

// Autodiff vs central differences for loss(xs) wrt each tensor in xs.
double grad_error(const std::function<Tensor()>& loss, std::vector<Tensor*> xs) {
    double worst = 0.0;
    for (Tensor* x : xs) {
        x->set_requires_grad(true);
        const auto ad = oracle::autodiff(loss, *x);
        const auto fd = oracle::central_diff([&] { return loss().item(); }, *x);
        worst = std::max(worst, oracle::max_rel_err(ad, fd));
    }
    return worst;
}

Tensor mixer(std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return Tensor::randn({cols, 3}, 1.0, rng);
}

}  // namespace

TEST_CASE("matmul small cases") {
    const Tensor a = Tensor::matrix(1, 1, {2.0});
    const Tensor b = Tensor::matrix(1, 1, {3.0});
    CHECK(matmul(a, b).item() == 6.0);

    std::mt19937_64 rng(1);
    const Tensor eye = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    const Tensor x = Tensor::randn({3, 5}, 1.0, rng);
    CHECK(matmul(eye, x).bitwise_equal(x));
}

TEST_CASE("matmul agrees with a triple loop") {
    std::mt19937_64 rng(2);
    for (auto [p, q, r] : {std::tuple{1, 1, 1}, {4, 5, 2}, {7, 3, 9}, {16, 64, 12}}) {
        const Tensor a = Tensor::randn({std::size_t(p), std::size_t(q)}, 1.0, rng);
        const Tensor b = Tensor::randn({std::size_t(q), std::size_t(r)}, 1.0, rng);
        const auto ref = oracle::naive_matmul(a, b);
        const auto got = oracle::values(matmul(a, b));
        REQUIRE(got.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("matmul gradient of a sum matches finite differences") {
    std::mt19937_64 rng(4);
    Tensor a = Tensor::randn({4, 5}, 1.0, rng);
    Tensor b = Tensor::randn({5, 2}, 1.0, rng);
    CHECK(grad_error([&] { return sum(matmul(a, b)); }, {&a, &b}) < 1e-6);
}

TEST_CASE("matmul_nt equals matmul with an explicit transpose") {
    std::mt19937_64 rng(5);
    const Tensor a = Tensor::randn({3, 4}, 1.0, rng);
    const Tensor b = Tensor::randn({6, 4}, 1.0, rng);
    std::vector<double> bt(4 * 6);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 4; ++j) bt[j * 6 + i] = b.at(i, j);
    const auto ref = oracle::naive_matmul(a, Tensor::matrix(4, 6, bt));
    const auto got = oracle::values(matmul_nt(a, b));
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("softmax rows") {
    const Tensor u = softmax_rows(Tensor::matrix(1, 3, {0, 0, 0}));
    for (double v : u.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const Tensor big = softmax_rows(Tensor::matrix(1, 2, {1000.0, 0.0}));
    CHECK(all_finite(big));
    CHECK(big.at(0, 0) == doctest::Approx(1.0));
    CHECK(big.at(0, 1) == doctest::Approx(0.0));

    std::mt19937_64 rng(6);
    const Tensor x = Tensor::randn({9, 7}, 5.0, rng);
    const Tensor s = softmax_rows(x);
    for (std::size_t r = 0; r < 9; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < 7; ++c) {
            CHECK(s.at(r, c) >= 0.0);
            CHECK(s.at(r, c) <= 1.0);
            total += s.at(r, c);
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("softmax gradient") {
    std::mt19937_64 rng(7);
    Tensor x = Tensor::randn({3, 4}, 1.0, rng);
    const Tensor mix = mixer(4, 8);
    CHECK(grad_error([&] { return readout(softmax_rows(x), mix); }, {&x}) < 1e-6);
}

TEST_CASE("causal softmax masks the future") {
    std::mt19937_64 rng(9);
    Tensor x = Tensor::randn({4, 6}, 1.0, rng);
    const Tensor s = causal_softmax_rows(x, 2);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 6; ++c)
            if (c > r + 2) CHECK(s.at(r, c) == 0.0);
    const Tensor mix = mixer(6, 10);
    CHECK(grad_error([&] { return readout(causal_softmax_rows(x, 2), mix); }, {&x}) < 1e-6);
}

TEST_CASE("layer norm") {
    const Tensor gain = Tensor::vector({1, 1, 1});
    const Tensor bias = Tensor::vector({0, 0, 0});
    const Tensor flat = layer_norm(Tensor::matrix(1, 3, {2, 2, 2}), gain, bias);
    for (double v : flat.data()) CHECK(v == 0.0);

    const Tensor unit = layer_norm(Tensor::matrix(1, 2, {1, -1}), Tensor::vector({1, 1}),
                                   Tensor::vector({0, 0}));
    const double shrink = 1.0 / std::sqrt(1.0 + 1e-5);
    CHECK(unit.at(0, 0) == doctest::Approx(shrink).epsilon(1e-15));
    CHECK(unit.at(0, 1) == doctest::Approx(-shrink).epsilon(1e-15));

    std::mt19937_64 rng(11);
    Tensor x = Tensor::randn({2, 8}, 1.0, rng);
    Tensor g = Tensor::randn({8}, 1.0, rng);
    Tensor b = Tensor::randn({8}, 1.0, rng);
    const Tensor mix = mixer(8, 12);
    CHECK(grad_error([&] { return readout(layer_norm(x, g, b), mix); }, {&x, &g, &b}) < 1e-6);
}

TEST_CASE("cross entropy") {
    CHECK(cross_entropy_logits(Tensor::matrix(2, 10, std::vector<double>(20, 0.0)), std::vector<int>{3, 7},
                               {true, true})
              .item() == doctest::Approx(std::log(10.0)).epsilon(1e-14));

    std::vector<double> peaked(2 * 4, -50.0);
    peaked[0 * 4 + 1] = 50.0;
    peaked[1 * 4 + 2] = 50.0;
    CHECK(cross_entropy_logits(Tensor::matrix(2, 4, peaked), std::vector<int>{1, 2}, {true, true}).item() < 1e-12);

    // Masked rows contribute nothing.
    std::vector<double> mixed(2 * 4, 0.0);
    mixed[1 * 4 + 0] = 50.0;
    CHECK(cross_entropy_logits(Tensor::matrix(2, 4, mixed), std::vector<int>{2, 0}, {false, true}).item() <
          1e-12);

    std::mt19937_64 rng(13);
    Tensor logits = Tensor::randn({5, 10}, 1.0, rng);
    const std::vector<int> targets{0, 9, 4, 4, 2};
    CHECK(grad_error([&] { return cross_entropy_logits(logits, targets, {true, false, true, true, true}); },
                     {&logits}) < 1e-6);
}

TEST_CASE("remaining differentiable ops pass the gradient check") {
    std::mt19937_64 rng(14);
    Tensor a = Tensor::randn({3, 4}, 1.0, rng);
    Tensor b = Tensor::randn({3, 4}, 1.0, rng);
    Tensor bias = Tensor::randn({4}, 1.0, rng);
    Tensor s = Tensor::scalar(0.7);
    Tensor table = Tensor::randn({6, 4}, 1.0, rng);
    const Tensor mix4 = mixer(4, 15), mix8 = mixer(8, 16), mix2 = mixer(2, 17);
    const std::vector<int> ids{5, 0, 5, 2};

    SUBCASE("add") { CHECK(grad_error([&] { return readout(add(a, b), mix4); }, {&a, &b}) < 1e-6); }
    SUBCASE("sub") { CHECK(grad_error([&] { return readout(sub(a, b), mix4); }, {&a, &b}) < 1e-6); }
    SUBCASE("add_row") { CHECK(grad_error([&] { return readout(add_row(a, bias), mix4); }, {&a, &bias}) < 1e-6); }
    SUBCASE("scale") { CHECK(grad_error([&] { return readout(scale(a, -1.5), mix4); }, {&a}) < 1e-6); }
    SUBCASE("mul_scalar") { CHECK(grad_error([&] { return readout(mul_scalar(a, s), mix4); }, {&a, &s}) < 1e-6); }
    SUBCASE("gelu") { CHECK(grad_error([&] { return readout(gelu(a), mix4); }, {&a}) < 1e-6); }
    SUBCASE("concat and slice rows") {
        CHECK(grad_error([&] { return readout(slice_rows(concat_rows({a, b}), 2, 5), mix4); }, {&a, &b}) < 1e-6);
    }
    SUBCASE("concat and slice cols") {
        CHECK(grad_error([&] { return readout(concat_cols({a, b}), mix8); }, {&a, &b}) < 1e-6);
        CHECK(grad_error([&] { return readout(slice_cols(a, 1, 3), mix2); }, {&a}) < 1e-6);
    }
    SUBCASE("gather rows with repeats") {
        CHECK(grad_error([&] { return readout(gather_rows(table, ids), mix4); }, {&table}) < 1e-6);
    }
    SUBCASE("mean") { CHECK(grad_error([&] { return mean(gelu(a)); }, {&a}) < 1e-6); }
    SUBCASE("attention") {
        Tensor q = Tensor::randn({3, 8}, 1.0, rng), kv = Tensor::randn({5, 8}, 1.0, rng);
        Tensor wq = Tensor::randn({8, 8}, 0.4, rng), wk = Tensor::randn({8, 8}, 0.4, rng);
        Tensor wv = Tensor::randn({8, 8}, 0.4, rng), wo = Tensor::randn({8, 8}, 0.4, rng);
        for (bool causal : {false, true})
            CHECK(grad_error([&] { return readout(nn::attention(q, causal ? q : kv, wq, wk, wv, wo, 2, causal), mix8); },
                             {&q, &kv, &wq, &wk, &wv, &wo}) < 1e-6);
    }
}

TEST_CASE("ops never mutate inputs and are deterministic") {
    std::mt19937_64 rng(18);
    const Tensor a = Tensor::randn({4, 4}, 1.0, rng);
    const Tensor copy = a.detach();
    const Tensor first = softmax_rows(gelu(matmul(a, a)));
    const Tensor second = softmax_rows(gelu(matmul(a, a)));
    CHECK(a.bitwise_equal(copy));
    CHECK(first.bitwise_equal(second));
}

TEST_CASE("shape errors are reported") {
    const Tensor a = Tensor::zeros({2, 3});
    CHECK_THROWS_AS(matmul(a, a), DimensionError);
    CHECK_THROWS_AS(add(a, Tensor::zeros({3, 2})), DimensionError);
    CHECK_THROWS_AS(slice_rows(a, 1, 4), DimensionError);
}

TEST_CASE("gradients accumulate across backward calls and skip frozen leaves") {
    Tensor x = Tensor::vector({1.0, 2.0}, true);
    const Tensor frozen = Tensor::vector({3.0, 4.0});
    sum(add(x, frozen)).backward();
    sum(add(x, frozen)).backward();
    CHECK(x.grad()[0] == 2.0);
    CHECK(x.grad()[1] == 2.0);
    CHECK_FALSE(frozen.has_grad());
}

// ---------------------------------------------------------------------------

TEST_CASE("finite_diff_grad helper") {
    Tensor x = Tensor::vector({0.3, -1.2, 2.0});
    const Tensor g = finite_diff_grad([](const Tensor& t) { return sum(t).item(); }, x);
    for (double v : g.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

    Tensor three = Tensor::scalar(3.0);
    const Tensor sq = finite_diff_grad(
        [](const Tensor& t) { return t.data()[0] * t.data()[0]; }, three);
    CHECK(std::abs(sq.item() - 6.0) < 1e-6);
    CHECK(three.item() == 3.0);
}

TEST_CASE("adam") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        ParameterSet p;
        p.add("w", Tensor::vector({1.0, -2.0}, true)).mutable_grad();
        auto state = make_adam(p, 0.1);
        const ParameterSet before = p.clone();
        adam_step(p, state);
        CHECK(p.bitwise_equal(before));
    }
    SUBCASE("one step on w^2 descends by lr") {
        ParameterSet p;
        Tensor w = p.add("w", Tensor::scalar(1.0, true));
        auto state = make_adam(p, 0.1);
        mul_scalar(w, w).backward();
        adam_step(p, state);
        // First bias-corrected step is lr * g / (|g| + eps').
        CHECK(w.item() == doctest::Approx(1.0 - 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
    }
    SUBCASE("least squares reaches the normal-equations optimum") {
        std::mt19937_64 rng(19);
        const Tensor a = Tensor::randn({12, 3}, 1.0, rng);
        const Tensor y = Tensor::randn({12, 1}, 1.0, rng);
        // Closed form via the 3x3 normal equations (Cramer's rule).
        double ata[3][3] = {}, aty[3] = {};
        for (std::size_t i = 0; i < 12; ++i)
            for (int r = 0; r < 3; ++r) {
                aty[r] += a.at(i, r) * y.at(i, 0);
                for (int c = 0; c < 3; ++c) ata[r][c] += a.at(i, r) * a.at(i, c);
            }
        auto det3 = [](double m[3][3]) {
            return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                   m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                   m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        };
        const double d = det3(ata);
        std::vector<double> opt(3);
        for (int k = 0; k < 3; ++k) {
            double m[3][3];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) m[r][c] = c == k ? aty[r] : ata[r][c];
            opt[k] = det3(m) / d;
        }
        // w is a 1x3 row; the residual row is w A^T - y^T and the loss is
        // its squared norm divided by the row count.
        ParameterSet p;
        Tensor w = p.add("w", Tensor::zeros({1, 3}, true));
        std::vector<double> yt(y.data().begin(), y.data().end());
        const Tensor y_row = Tensor::matrix(1, 12, yt);
        auto loss = [&] {
            const Tensor r = sub(matmul_nt(w, a), y_row);
            return scale(matmul_nt(r, r), 1.0 / 12.0);
        };
        Tensor w_opt = Tensor::matrix(1, 3, opt);
        const Tensor r_opt = sub(matmul_nt(w_opt, a), y_row);
        const double best = matmul_nt(r_opt, r_opt).item() / 12.0;

        auto state = make_adam(p, 0.05);
        for (int step = 0; step < 200; ++step) {
            p.zero_grad();
            loss().backward();
            adam_step(p, state);
        }
        CHECK(loss().item() - best < 1e-3);
        CHECK(loss().item() >= best - 1e-12);
    }
}
