// SPDX-License-Identifier: Apache-2.0
//
// Scoring and the analysis reports: complementarity of the unimodal models,
// recovery on the both-wrong subset, prediction barcodes and the ablation /
// sweep summaries.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "diva/tabletask.hpp"
#include "diva/trainer.hpp"

namespace diva::eval {

struct PredictionRecord {
    std::string instance_id;
    std::string method;
    std::string modality;
    task::TaskKind kind = task::TaskKind::TCR;
    std::vector<bool> correct;
    std::vector<int> tokens;
    bool overflow = false;  // input exceeded the LM budget; scored all-false

    std::size_t correct_count() const;
    double fraction() const;
    bool all_correct() const;
    bool operator==(const PredictionRecord&) const = default;
};

class AlignmentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Decoded answer tokens for an instance. May throw lm::LengthError.
using Predictor = std::function<std::vector<int>(const task::TaskInstance&)>;

// Decoding budget: the target length plus a small slack.
std::size_t decode_budget(const task::TaskInstance& instance);

// Records come back in input order; jobs > 1 fans out over instances.
std::vector<PredictionRecord> evaluate(std::span<const task::TaskInstance> instances,
                                       const Predictor& predictor, const std::string& method,
                                       const std::string& modality, std::size_t jobs = 1);

struct ModelSetup {
    const lm::FrozenLm* lm = nullptr;
    trainer::TrainConfig config;
    trainer::FusionParams params;
};

std::vector<PredictionRecord> evaluate(std::span<const trainer::Prepared> prepared,
                                       const ModelSetup& setup, std::size_t jobs = 1);

// Per-record JSON lines, for the analyze step.
void write_records(const std::filesystem::path& path, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_records(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct ComplementarityReport {
    std::size_t n = 0;
    double text_accuracy = 0.0;
    double vision_accuracy = 0.0;
    double text_only = 0.0;
    double vision_only = 0.0;
    double both_correct = 0.0;
    double both_wrong = 0.0;
    double any_correct = 0.0;
    // (text_only + vision_only) / any_correct; 0 when nothing is correct.
    double one_modality_only = 0.0;
};

// Instance-level: a record is correct when every item is. Throws
// AlignmentError unless both sets cover the same ids exactly once.
ComplementarityReport complementarity(std::span<const PredictionRecord> text,
                                      std::span<const PredictionRecord> vision);

// Both-wrong membership. TCR: no coordinate correct. Other kinds: the
// instance is not fully correct.
bool fully_wrong(const PredictionRecord& r);

struct MethodRecovery {
    std::string method;
    std::size_t recovered = 0;  // coordinates (TCR) or instances
    std::size_t total = 0;
    bool defined = false;
    double fraction = 0.0;
};

struct RecoveryReport {
    std::vector<std::string> subset_ids;  // sorted
    bool defined = false;                 // false when the subset is empty
    std::vector<MethodRecovery> methods;
};

using NamedRecords = std::pair<std::string, std::span<const PredictionRecord>>;

RecoveryReport recovery_rate(std::span<const PredictionRecord> text,
                             std::span<const PredictionRecord> vision,
                             std::span<const NamedRecords> fused);

// ---------------------------------------------------------------------------

enum class BarcodeGroup { Win, Tie, Loss };
std::string group_name(BarcodeGroup g);

struct BarcodeColumn {
    std::string instance_id;
    BarcodeGroup group = BarcodeGroup::Tie;
    double text = 0.0, vision = 0.0, concat = 0.0, diva = 0.0;
};

// Win/Tie/Loss compares DiVA against concatenation by correct fraction.
// Within a group columns run by descending DiVA intensity, then by id.
std::vector<BarcodeColumn> barcode_columns(std::span<const PredictionRecord> text,
                                           std::span<const PredictionRecord> vision,
                                           std::span<const PredictionRecord> concat,
                                           std::span<const PredictionRecord> diva,
                                           bool both_wrong_only);

std::string barcode_csv(std::span<const BarcodeColumn> columns);
std::string barcode_svg(std::span<const BarcodeColumn> columns, const std::string& title);
void barcode_export(std::span<const BarcodeColumn> columns, const std::filesystem::path& svg,
                    const std::filesystem::path& csv, const std::string& title);

// ---------------------------------------------------------------------------

// Micro mean over items, per task kind.
std::map<std::string, double> kind_scores(std::span<const PredictionRecord> records);

struct RunSummary {
    std::vector<std::string> labels;  // position in the report grid
    std::uint64_t seed = 0;
    std::map<std::string, double> scores;  // per task kind
};

// Unweighted mean over the kinds present.
double average_score(const std::map<std::string, double>& scores);

struct SummaryRow {
    std::vector<std::string> labels;
    bool missing = true;
    std::size_t seeds = 0;
    std::map<std::string, double> kind_mean;
    double avg_mean = 0.0, avg_min = 0.0, avg_max = 0.0;
};

struct SummaryTable {
    std::vector<std::string> label_names;
    std::vector<std::string> kinds;
    std::vector<SummaryRow> rows;
    std::vector<std::string> warnings;
};

// One row per grid entry, in grid order, aggregated over seeds as mean and
// range. Grid entries without runs stay blank and add a warning.
SummaryTable summarize_grid(std::vector<std::string> label_names,
                            const std::vector<std::vector<std::string>>& grid,
                            std::span<const RunSummary> runs, std::vector<std::string> kinds);

std::string summary_csv(const SummaryTable& table);

// Rows of the role/gate ablation: gate, query, context.
std::vector<std::vector<std::string>> ablation_grid();
inline const std::vector<double> kG0Grid = {1.0, 1e-1, 1e-2, 1e-3, 1e-4};
inline const std::vector<std::size_t> kDepthGrid = {1, 2, 3, 6};

std::string format_number(double v);

}  // namespace diva::eval
