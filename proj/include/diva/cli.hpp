// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration and the command implementations behind the
// `diva` executable.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "diva/evalkit.hpp"

namespace diva::cli {

struct Paths {
    std::filesystem::path data = "data";
    std::filesystem::path runs = "runs";
    std::filesystem::path reports = "reports";
};

struct DataConfig {
    std::uint64_t seed = 1;
    std::vector<task::TaskKind> kinds{std::begin(task::kAllKinds), std::end(task::kAllKinds)};
    std::size_t pretrain_per_kind = 4000;
    std::size_t heldout_per_kind = 40;
    std::size_t train_per_kind = 4000;
    std::size_t eval_per_kind = 500;
};

struct LmSection {
    lm::LmConfig model;
    lm::PretrainConfig train;
    bool text = true;
    bool vision = true;
};

struct ExperimentConfig {
    Paths paths;
    task::TableBounds bounds;
    task::CorruptionSpec corruption;
    std::uint64_t encoder_seed = 7;
    DataConfig data;
    LmSection lm;
    trainer::TrainConfig train;  // method/modality come from the command line
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::vector<double> g0_grid = eval::kG0Grid;
    std::vector<std::size_t> depth_grid = eval::kDepthGrid;
    std::string analysis_kind = "TCR";  // kind used for the complementarity views
    std::size_t jobs = 1;

    void validate() const;
};

ExperimentConfig default_config();

// Sectioned key=value text. Unknown sections or keys are config errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& config);

// Relative paths are resolved against DIVA_ROOT when it is set, otherwise
// against the working directory.
void resolve_paths(ExperimentConfig& config);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumeric = 2;

int run(int argc, char** argv);

// Command bodies, exposed for tests. Each writes only under config.paths.
void cmd_gen_data(const ExperimentConfig& config, bool dump_human);
void cmd_pretrain_lm(const ExperimentConfig& config);

struct TrainRequest {
    trainer::TrainConfig config;
    std::string run_id;  // empty: derived from the config
    std::vector<task::TaskKind> kinds;  // empty: every configured kind
};

std::string default_run_id(const trainer::TrainConfig& config);
// Returns the run directory. Throws NumericError when the run aborted.
std::filesystem::path cmd_train(const ExperimentConfig& config, const TrainRequest& request);
void cmd_eval(const ExperimentConfig& config, const std::string& run_id);

// Run configs used by the pipeline. The gated vision-query / text-context
// ablation row is the main diva run.
trainer::TrainConfig base_train(const ExperimentConfig& config, trainer::Method method,
                                trainer::Modality modality, std::uint64_t seed);
trainer::TrainConfig ablation_config(const ExperimentConfig& config, const std::vector<std::string>& row,
                                     std::uint64_t seed);
trainer::TrainConfig g0_config(const ExperimentConfig& config, double g0, std::uint64_t seed);
trainer::TrainConfig depth_config(const ExperimentConfig& config, std::size_t depth, std::uint64_t seed);

// Trains and evaluates unless a finished run with the same config, kinds and
// LM already exists. Returns the run id.
std::string ensure_run(const ExperimentConfig& config, TrainRequest request);
void cmd_analyze(const ExperimentConfig& config);
void cmd_sweep(const ExperimentConfig& config);
void cmd_all(const ExperimentConfig& config);

}  // namespace diva::cli
