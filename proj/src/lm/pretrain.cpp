// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "diva/lm.hpp"

namespace diva::lm {

double mean_loss(std::span<const LmExample> examples, const LmWeights& lm) {
    if (examples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& ex : examples) total += example_loss(ex, lm).item();
    return total / static_cast<double>(examples.size());
}

FrozenLm pretrain_lm(std::span<const LmExample> corpus, std::span<const LmExample> heldout,
                     const LmConfig& config, const PretrainConfig& train, PretrainLog* log,
                     const std::function<void(std::size_t, double)>& on_log) {
    if (corpus.empty()) throw ConfigError("pretrain_lm: empty corpus");
    if (train.batch == 0) throw ConfigError("pretrain_lm: batch must be positive");

    LmWeights weights = LmWeights::init(config, train.seed);
    ParameterSet params = weights.parameters();
    params.set_requires_grad(true);
    AdamState adam = make_adam(params, train.lr);

    // Held-out loss is evaluated without recording a graph.
    auto heldout_loss = [&] {
        params.set_requires_grad(false);
        const double l = mean_loss(heldout, weights);
        params.set_requires_grad(true);
        return l;
    };
    if (log) log->heldout_loss_start = heldout_loss();

    std::mt19937_64 rng(train.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    double window = 0.0;
    std::size_t window_n = 0;
    for (std::size_t step = 0; step < train.steps; ++step) {
        params.zero_grad();
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < train.batch; ++b) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            const Tensor loss = example_loss(corpus[order[cursor++]], weights);
            batch_loss += loss.item();
            loss.backward(1.0 / static_cast<double>(train.batch));
        }
        batch_loss /= static_cast<double>(train.batch);
        if (!std::isfinite(batch_loss))
            throw NumericError("pretrain_lm diverged: seed=" + std::to_string(train.seed) +
                               " step=" + std::to_string(step) + " loss=" +
                               std::to_string(batch_loss));
        for (auto& p : params.items()) p.tensor.mutable_grad();  // untouched rows get zeros
        if (train.max_grad_norm > 0.0) {
            const double norm = std::sqrt(grad_norm_sq(params));
            if (norm > train.max_grad_norm) scale_grads(params, train.max_grad_norm / norm);
        }
        const double warm = train.warmup == 0
                                ? 1.0
                                : std::min(1.0, static_cast<double>(step + 1) /
                                                    static_cast<double>(train.warmup));
        adam.lr = train.lr * warm;
        adam_step(params, adam);

        window += batch_loss;
        ++window_n;
        if (train.log_every > 0 && ((step + 1) % train.log_every == 0 || step + 1 == train.steps)) {
            const double avg = window / static_cast<double>(window_n);
            if (log) log->train_curve.emplace_back(step + 1, avg);
            if (on_log) on_log(step + 1, avg);
            window = 0.0;
            window_n = 0;
        }
    }
    if (log) log->heldout_loss_end = heldout_loss();
    return FrozenLm(weights);
}

}  // namespace diva::lm
