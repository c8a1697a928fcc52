// SPDX-License-Identifier: Apache-2.0
//
// Supervised fine-tuning of a fusion module through the frozen decoder.
// Only the fusion parameters are ever handed to the optimizer.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diva/lm.hpp"
#include "diva/resampler.hpp"
#include "diva/tabletask.hpp"

namespace diva::trainer {

enum class Method { Direct, Adapter, FixedResampler, Diva, DivaAblation };
enum class Modality { Text, Vision, VPlusT, TPlusV };
enum class Source { Vision, Text };

std::string method_name(Method m);
std::string modality_name(Modality m);
std::string source_name(Source s);
Method parse_method(const std::string& s);
Modality parse_modality(const std::string& s);
Source parse_source(const std::string& s);

struct TrainConfig {
    Method method = Method::Diva;
    Modality modality = Modality::VPlusT;
    // Resampler wiring. Plain diva always uses vision queries over text.
    Source query_source = Source::Vision;
    Source context_source = Source::Text;
    bool gates_enabled = true;
    double g0 = 1e-3;
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t ffn_mult = 4;
    double init_std = 0.02;
    std::size_t k_queries = resampler::kDefaultFixedQueries;
    std::size_t adapter_hidden = 256;

    double lr = 1e-3;
    std::size_t batch = 16;
    std::size_t steps = 3000;
    double max_grad_norm = 1.0;
    std::size_t checkpoint_every = 0;  // 0: final checkpoint only
    std::uint64_t seed = 0;

    // Throws ConfigError for combinations outside the experiment grid.
    void validate() const;
    resampler::DivaConfig diva_config(std::size_t d) const;
};

// Key=value lines in a fixed order; also the run's config echo.
std::string config_echo(const TrainConfig& config);
// Inverse of config_echo. Unknown keys are ignored so run directories can
// carry extra lines.
TrainConfig parse_config_echo(const std::string& text);

// Trainable state for one method. Exactly one member is engaged, or none
// for direct concatenation.
struct FusionParams {
    std::optional<resampler::AdapterParams> adapter;
    std::optional<resampler::FixedResamplerParams> fixed;
    std::optional<resampler::DivaParams> diva;

    ParameterSet parameters() const;
    FusionParams clone() const;
};

FusionParams init_fusion(const TrainConfig& config, std::size_t d);

// Inputs of one instance, computed once. text is C (LM embeddings of the
// serialized table at positions 0..m-1); vision is V.
struct Prepared {
    const task::TaskInstance* instance = nullptr;
    std::vector<int> text_tokens;
    Tensor text;
    Tensor vision;
};

struct Modalities {
    task::VisionEncoder encoder;
    task::CorruptionSpec corruption;
};

Prepared prepare(const task::TaskInstance& instance, const lm::FrozenLm& lm,
                 const Modalities& modalities);
std::vector<Prepared> prepare_all(std::span<const task::TaskInstance> instances,
                                  const lm::FrozenLm& lm, const Modalities& modalities);

// Soft prefix handed to the LM.
Tensor build_context(const Prepared& p, const TrainConfig& config, const FusionParams& params,
                     const lm::FrozenLm& lm);

// Teacher-forced NLL of the target given [prefix; <sep>; prompt].
Tensor sft_loss(const task::TaskInstance& instance, const Tensor& prefix, const lm::FrozenLm& lm);

// Pretraining examples for the backbone. Text examples carry the serialized
// table as context tokens; vision examples carry V as a soft prefix.
std::vector<lm::LmExample> lm_examples(std::span<const task::TaskInstance> instances,
                                       const Modalities& modalities, bool text, bool vision);

struct RunResult {
    TrainConfig config;
    FusionParams params;
    std::vector<std::pair<std::size_t, double>> loss_curve;  // one entry per step
    double wall_seconds = 0.0;
    std::size_t skipped = 0;  // over-length instances
    bool aborted = false;
    std::string abort_reason;
    std::uint64_t lm_hash = 0;
    std::vector<std::string> warnings;
};

struct TrainHooks {
    std::function<void(std::size_t step, double loss)> on_step;
    std::function<void(std::size_t step, const FusionParams& params)> on_checkpoint;
};

// Adam over the method's parameters with deterministic batch order. A NaN
// loss or non-finite activation stops the run and returns the parameters
// of the last step whose loss was finite (aborted = true). Throws
// std::logic_error if the LM hash moves.
RunResult train_run(const TrainConfig& config, std::span<const Prepared> train,
                    const lm::FrozenLm& lm, const TrainHooks& hooks = {});

// Mean of the trailing window of the loss curve.
double smoothed_loss(std::span<const std::pair<std::size_t, double>> curve, std::size_t window,
                     std::optional<std::size_t> end_step = std::nullopt);

// runs/<id>/ layout: config.txt, loss.csv, params.ckpt, lm.hash, meta.txt.
void write_run(const std::filesystem::path& dir, const RunResult& result);
FusionParams load_fusion(const std::filesystem::path& checkpoint, const TrainConfig& config,
                         std::size_t d);

}  // namespace diva::trainer
