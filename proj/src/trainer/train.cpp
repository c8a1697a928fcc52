// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "diva/checkpoint.hpp"
#include "diva/params.hpp"
#include "diva/trainer.hpp"

namespace diva::trainer {

RunResult train_run(const TrainConfig& config, std::span<const Prepared> train,
                    const lm::FrozenLm& lm, const TrainHooks& hooks) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    RunResult result;
    result.config = config;
    result.lm_hash = lm.hash();
    result.params = init_fusion(config, lm.config().d);

    auto finish = [&] {
        result.params.parameters().set_requires_grad(false);
        result.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (lm.hash() != result.lm_hash)
            throw std::logic_error("train_run: frozen LM weights changed during training");
        return result;
    };

    if (config.method == Method::Direct) {
        result.warnings.push_back("direct concatenation has no trainable parameters; train is a no-op");
        return finish();
    }
    if (train.empty()) throw ConfigError("train_run: empty training set");

    ParameterSet params = result.params.parameters();
    params.set_requires_grad(true);
    AdamState adam = make_adam(params, config.lr);

    std::mt19937_64 rng(config.seed ^ 0xd1b54a32d192ed03ULL);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    FusionParams last_good = result.params.clone();
    for (std::size_t step = 0; step < config.steps; ++step) {
        params.zero_grad();
        double batch_loss = 0.0;
        std::size_t used = 0;
        try {
            for (std::size_t b = 0; b < config.batch; ++b) {
                if (cursor == order.size()) {
                    std::shuffle(order.begin(), order.end(), rng);
                    cursor = 0;
                }
                const Prepared& p = train[order[cursor++]];
                Tensor loss;
                try {
                    loss = sft_loss(*p.instance, build_context(p, config, result.params, lm), lm);
                } catch (const lm::LengthError&) {
                    ++result.skipped;
                    continue;
                }
                batch_loss += loss.item();
                ++used;
                loss.backward(1.0 / static_cast<double>(config.batch));
            }
        } catch (const NumericError& e) {
            result.aborted = true;
            result.abort_reason = "step " + std::to_string(step) + ": " + e.what();
        }
        if (!result.aborted && used == 0) {
            result.warnings.push_back("step " + std::to_string(step) +
                                      ": every instance in the batch exceeded the LM budget");
            continue;
        }
        if (!result.aborted) {
            batch_loss /= static_cast<double>(used);
            if (!std::isfinite(batch_loss)) {
                result.aborted = true;
                result.abort_reason = "step " + std::to_string(step) + ": non-finite loss (seed " +
                                      std::to_string(config.seed) + ")";
            }
        }
        if (result.aborted) {
            result.params = std::move(last_good);
            return finish();
        }

        last_good = result.params.clone();
        for (auto& p : params.items()) p.tensor.mutable_grad();
        // Batches with skipped instances keep the 1/batch weighting.
        if (config.max_grad_norm > 0.0) {
            const double norm = std::sqrt(grad_norm_sq(params));
            if (norm > config.max_grad_norm) scale_grads(params, config.max_grad_norm / norm);
        }
        adam_step(params, adam);
        result.loss_curve.emplace_back(step + 1, batch_loss);
        if (hooks.on_step) hooks.on_step(step + 1, batch_loss);
        if (hooks.on_checkpoint && config.checkpoint_every > 0 &&
            (step + 1) % config.checkpoint_every == 0)
            hooks.on_checkpoint(step + 1, result.params);
    }
    return finish();
}

double smoothed_loss(std::span<const std::pair<std::size_t, double>> curve, std::size_t window,
                     std::optional<std::size_t> end_step) {
    std::size_t end = curve.size();
    if (end_step) {
        end = 0;
        while (end < curve.size() && curve[end].first <= *end_step) ++end;
    }
    if (end == 0 || window == 0) throw std::invalid_argument("smoothed_loss: empty window");
    const std::size_t begin = end > window ? end - window : 0;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += curve[i].second;
    return s / static_cast<double>(end - begin);
}

void write_run(const std::filesystem::path& dir, const RunResult& r) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        return f;
    };
    open("config.txt") << config_echo(r.config);
    {
        auto f = open("loss.csv");
        f.precision(17);
        f << "step,loss\n";
        for (const auto& [s, l] : r.loss_curve) f << s << ',' << l << '\n';
    }
    save_checkpoint(dir / "params.ckpt", r.params.parameters());
    open("lm.hash") << hash_hex(r.lm_hash) << '\n';
    {
        auto f = open("meta.txt");
        f << "wall_seconds=" << r.wall_seconds << '\n'
          << "skipped=" << r.skipped << '\n'
          << "aborted=" << (r.aborted ? "true" : "false") << '\n';
        if (r.aborted) f << "abort_reason=" << r.abort_reason << '\n';
        for (const auto& w : r.warnings) f << "warning=" << w << '\n';
    }
}

FusionParams load_fusion(const std::filesystem::path& checkpoint, const TrainConfig& config,
                         std::size_t d) {
    FusionParams p = init_fusion(config, d);
    if (config.method == Method::Direct) return p;
    ParameterSet target = p.parameters();
    target.assign_from(load_checkpoint(checkpoint));
    return p;
}

}  // namespace diva::trainer
