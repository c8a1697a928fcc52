// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "diva/lm.hpp"
#include "oracle.hpp"

using namespace diva;
using namespace diva::lm;

namespace {

LmConfig tiny() {
    LmConfig c;
    c.d = 16;
    c.layers = 2;
    c.heads = 2;
    c.max_len = 48;
    return c;
}

const Vocab& V() { return Vocab::standard(); }

std::vector<int> ids(std::initializer_list<const char*> toks) {
    std::vector<int> out;
    for (const char* t : toks) out.push_back(V().id(t));
    return out;
}

}  // namespace

TEST_CASE("standard vocabulary") {
    CHECK(V().size() == 72);
    for (int i = 0; i < int(V().size()); ++i) {
        const std::vector<int> one{i};
        CHECK(V().encode(V().decode(one)) == one);
    }
    CHECK(V().row_index(V().row_token(7)) == 7);
    CHECK(V().col_index(V().col_token(12)) == 12);
    CHECK_FALSE(V().row_index(V().id("A")).has_value());
    CHECK(V().is_symbol(V().id("Z")));
    CHECK(V().is_symbol(V().id("0")));
    CHECK_FALSE(V().is_symbol(V().id("C1")));
    CHECK_FALSE(V().find("<nope>").has_value());
    CHECK_THROWS(V().id("<nope>"));

    const auto path = std::filesystem::temp_directory_path() / "diva_vocab.txt";
    V().save(path);
    CHECK(Vocab::load(path).tokens() == V().tokens());
    std::filesystem::remove(path);
}

TEST_CASE("embed_tokens") {
    const LmWeights w = LmWeights::init(tiny(), 1);
    CHECK(embed_tokens(std::vector<int>{}, w).rows() == 0);
    const auto toks = ids({"A", "<col>", "B"});
    const Tensor e0 = embed_tokens(toks, w);
    const Tensor e5 = embed_tokens(toks, w, 5);
    CHECK(e0.rows() == 3);
    CHECK(e0.cols() == 16);
    CHECK_FALSE(e0.bitwise_equal(e5));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 16; ++j)
            CHECK(e5.at(i, j) == w.tok_emb.at(toks[i], j) + w.pos_emb.at(5 + i, j));
    CHECK_THROWS(embed_tokens(std::vector<int>{999}, w));
    CHECK_THROWS_AS(embed_tokens(toks, w, 46), LengthError);
}

TEST_CASE("soft prefix continues token positions") {
    // Feeding the first k embedded tokens as a prefix must reproduce the
    // logits of the plain pass on the remaining positions.
    const LmWeights w = LmWeights::init(tiny(), 2);
    const auto toks = ids({"<sep>", "TCE", "R2", "C3", "Q", "<eos>"});
    const Tensor plain = lm_forward(Tensor::zeros({0, 16}), toks, w);
    const std::size_t k = 2;
    const Tensor prefix = embed_tokens(std::span(toks).first(k), w);
    const Tensor shifted = lm_forward(prefix, std::span(toks).subspan(k), w);
    REQUIRE(shifted.rows() == toks.size() - k);
    for (std::size_t i = 0; i < shifted.rows(); ++i)
        for (std::size_t j = 0; j < shifted.cols(); ++j)
            CHECK(shifted.at(i, j) == doctest::Approx(plain.at(i + k, j)).epsilon(1e-12));
}

TEST_CASE("causality") {
    const LmWeights w = LmWeights::init(tiny(), 3);
    std::mt19937_64 rng(4);
    const Tensor prefix = Tensor::randn({3, 16}, 1.0, rng);
    auto toks = ids({"<sep>", "TSR", "R1", "C1", "<eos>"});
    const Tensor before = lm_forward(prefix, toks, w);
    toks[3] = V().id("R9");
    toks[4] = V().id("A");
    const Tensor after = lm_forward(prefix, toks, w);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < before.cols(); ++j) CHECK(before.at(i, j) == after.at(i, j));
    // Editing a prefix row changes token logits.
    Tensor edited = prefix.detach();
    edited.mutable_data()[2 * 16] += 1.0;
    CHECK_FALSE(lm_forward(edited, toks, w).bitwise_equal(after));
}

TEST_CASE("sequence budget") {
    const LmWeights w = LmWeights::init(tiny(), 5);
    const std::vector<int> toks(10, V().id("A"));
    CHECK_NOTHROW(lm_forward(Tensor::zeros({38, 16}), toks, w));
    CHECK_THROWS_AS(lm_forward(Tensor::zeros({39, 16}), toks, w), LengthError);
    CHECK_THROWS_AS(lm_forward(Tensor::zeros({2, 8}), toks, w), DimensionError);
}

TEST_CASE("uniform logits give ln |V|") {
    LmWeights w = LmWeights::init(tiny(), 6);
    for (double& x : w.head.mutable_data()) x = 0.0;
    const Tensor loss = prefix_target_loss(Tensor::zeros({0, 16}), ids({"TSR"}), ids({"R2", "C2", "<eos>"}), w);
    CHECK(loss.item() == doctest::Approx(std::log(72.0)).epsilon(1e-12));
}

TEST_CASE("target loss equals a hand log-softmax over target positions") {
    const LmWeights w = LmWeights::init(tiny(), 7);
    std::mt19937_64 rng(70);
    const Tensor prefix = Tensor::randn({2, 16}, 1.0, rng);
    const auto prompt = ids({"TCE", "R1", "C1"});
    const auto target = ids({"A", "<eos>"});
    // Input: <sep> prompt target[0]; predictions for rows 3 and 4 score target.
    std::vector<int> input{V().sep()};
    input.insert(input.end(), prompt.begin(), prompt.end());
    input.push_back(target[0]);
    const Tensor logits = lm_forward(prefix, input, w);
    double nll = 0.0;
    for (std::size_t k = 0; k < target.size(); ++k) {
        const std::size_t row = prompt.size() + k;
        double mx = -1e300;
        for (std::size_t j = 0; j < logits.cols(); ++j) mx = std::max(mx, logits.at(row, j));
        double z = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) z += std::exp(logits.at(row, j) - mx);
        nll += -(logits.at(row, target[k]) - mx - std::log(z));
    }
    nll /= double(target.size());
    CHECK(prefix_target_loss(prefix, prompt, target, w).item() == doctest::Approx(nll).epsilon(1e-12));
    CHECK_THROWS(prefix_target_loss(prefix, prompt, std::vector<int>{}, w));
}

TEST_CASE("gradients reach the prefix but never the frozen weights") {
    const FrozenLm lm(LmWeights::init(tiny(), 8));
    for (const auto& p : lm.parameters().items()) CHECK_FALSE(p.tensor.requires_grad());
    std::mt19937_64 rng(9);
    Tensor prefix = Tensor::randn({4, 16}, 1.0, rng, true);
    const auto hash = lm.hash();
    prefix_target_loss(prefix, ids({"TSR"}), ids({"R2", "C3", "<eos>"}), lm.weights()).backward();
    CHECK(prefix.has_grad());
    double norm = 0.0;
    for (double g : prefix.grad()) norm += g * g;
    CHECK(norm > 0.0);
    for (const auto& p : lm.parameters().items()) CHECK_FALSE(p.tensor.has_grad());
    CHECK(lm.hash() == hash);

    // The prefix gradient agrees with central differences.
    auto loss = [&] { return prefix_target_loss(prefix, ids({"TSR"}), ids({"R2", "C3", "<eos>"}), lm.weights()); };
    const auto ad = oracle::autodiff(loss, prefix);
    const auto fd = oracle::central_diff([&] { return loss().item(); }, prefix);
    CHECK(oracle::max_rel_err(ad, fd, 1e-6) < 1e-5);
}

TEST_CASE("greedy decoding") {
    LmWeights w = LmWeights::init(tiny(), 10);
    // Collapse the final norm to a constant direction that votes for <eos>.
    for (double& x : w.lnf_gain.mutable_data()) x = 0.0;
    for (double& x : w.lnf_bias.mutable_data()) x = 0.0;
    w.lnf_bias.mutable_data()[0] = 1.0;
    for (double& x : w.head.mutable_data()) x = 0.0;
    w.head.mutable_data()[0 * V().size() + V().eos()] = 5.0;
    const FrozenLm eos_lm(w);
    CHECK(greedy_decode(eos_lm, Tensor::zeros({0, 16}), ids({"TSR"}), 8).empty());

    // Voting for "B" instead never stops early and respects the budget.
    w.head.mutable_data()[0 * V().size() + V().eos()] = 0.0;
    w.head.mutable_data()[0 * V().size() + V().id("B")] = 5.0;
    const FrozenLm b_lm(w);
    const auto out = greedy_decode(b_lm, Tensor::zeros({0, 16}), ids({"TSR"}), 4);
    CHECK(out == ids({"B", "B", "B", "B"}));

    const FrozenLm lm(LmWeights::init(tiny(), 11));
    std::mt19937_64 rng(12);
    const Tensor prefix = Tensor::randn({3, 16}, 1.0, rng);
    CHECK(greedy_decode(lm, prefix, ids({"TCR", "A"}), 6) == greedy_decode(lm, prefix, ids({"TCR", "A"}), 6));
}

TEST_CASE("pretraining") {
    // A copy task: the target repeats the single context symbol.
    std::vector<LmExample> corpus, heldout;
    const std::string alpha = Vocab::alphabet();
    for (int i = 0; i < 72; ++i) {
        LmExample ex;
        const int sym = V().id(std::string(1, alpha[i % alpha.size()]));
        ex.context = {V().row_sep(), sym};
        ex.prompt = ids({"TCE", "R1", "C1"});
        ex.target = {sym, V().eos()};
        (i < 60 ? corpus : heldout).push_back(ex);
    }
    std::mt19937_64 rng(13);
    LmExample soft;
    soft.soft_prefix = Tensor::randn({2, 16}, 1.0, rng);
    soft.prompt = ids({"TSR"});
    soft.target = ids({"R1", "C2", "<eos>"});
    corpus.push_back(soft);

    PretrainConfig pc;
    pc.steps = 0;
    const FrozenLm untouched = pretrain_lm(corpus, heldout, tiny(), pc);
    CHECK(untouched.parameters().bitwise_equal(LmWeights::init(tiny(), pc.seed).parameters()));

    pc.steps = 150;
    pc.batch = 8;
    pc.warmup = 10;
    PretrainLog log;
    const FrozenLm a = pretrain_lm(corpus, heldout, tiny(), pc, &log);
    const FrozenLm b = pretrain_lm(corpus, heldout, tiny(), pc);
    CHECK(a.hash() == b.hash());
    CHECK(log.heldout_loss_end < log.heldout_loss_start);
    CHECK_FALSE(log.train_curve.empty());
    for (const auto& p : a.parameters().items()) CHECK_FALSE(p.tensor.requires_grad());

    CHECK_THROWS_AS(pretrain_lm({}, heldout, tiny(), pc), ConfigError);
}

TEST_CASE("weights round trip through named parameters") {
    const LmWeights w = LmWeights::init(tiny(), 14);
    const LmWeights back = LmWeights::from_parameters(tiny(), w.parameters().clone());
    CHECK(back.parameters().bitwise_equal(w.parameters()));
    LmConfig other = tiny();
    other.d = 8;
    CHECK_THROWS(LmWeights::from_parameters(other, w.parameters()));
}

TEST_CASE("config validation") {
    LmConfig c = tiny();
    c.heads = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny();
    CHECK(c.resolved_init_std() == doctest::Approx(0.25));
    c.init_std = 0.02;
    CHECK(c.resolved_init_std() == 0.02);
    CHECK(c.resolved_vocab() == 72);
}
