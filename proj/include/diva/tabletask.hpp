// SPDX-License-Identifier: Apache-2.0
//
// Synthetic tables and the five task kinds used to probe structure
// understanding. Text and vision carriers are complementary by
// construction: the serialized text keeps every cell exactly but encodes
// layout only implicitly (separator order), while the visual grid carries an
// exact 2D position code per cell next to a content code that may be noisy
// or swapped for another symbol.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "diva/tensor.hpp"
#include "diva/vocab.hpp"

namespace diva::task {

enum class TaskKind { TSR, TCE, RCE, TCR, LookupQA };

inline constexpr TaskKind kAllKinds[] = {TaskKind::TSR, TaskKind::TCE, TaskKind::RCE,
                                         TaskKind::TCR, TaskKind::LookupQA};

std::string kind_name(TaskKind kind);
TaskKind parse_kind(const std::string& name);

struct TableBounds {
    int min_rows = 2, max_rows = 4;
    int min_cols = 2, max_cols = 4;
    int min_cell_len = 1, max_cell_len = 1;

    void validate() const;
};

// 0-based grid of cell strings over the cell alphabet.
struct Table {
    int rows = 0;
    int cols = 0;
    std::vector<std::string> cells;  // row-major

    const std::string& cell(int r, int c) const { return cells[static_cast<std::size_t>(r * cols + c)]; }
    std::size_t cell_count() const { return cells.size(); }
    // Number of cells holding exactly this string.
    int occurrences(const std::string& value) const;
    bool operator==(const Table&) const = default;
};

// Uniform dimensions within bounds; cells uniform over the alphabet. The
// first row and first column are kept duplicate-free because they serve as
// lookup keys. Throws ConfigError if the bounds cannot be satisfied.
Table gen_table(std::mt19937_64& rng, const TableBounds& bounds);

// Row-major: "<row>" then each cell's symbols, cells separated by "<col>".
std::vector<int> serialize_text(const Table& table);
// Inverse of serialize_text; throws FormatError-like std::invalid_argument
// on malformed input.
Table parse_text(std::span<const int> tokens);

// ASCII rendering for inspection.
std::string render_table(const Table& table);

// ---------------------------------------------------------------------------
// Vision carrier.

struct CorruptionSpec {
    double content_noise_std = 0.5;
    double symbol_swap_prob = 0.25;
    // Text serialization never embeds 2D indices; fixed.
    static constexpr bool text_layout_only_1d = true;

    void validate() const;
};

struct VisualGrid {
    int rows = 0, cols = 0;
    // Pre-projection channels per cell: [row code | col code | content].
    Tensor raw;
    // raw x projection, n x d.
    Tensor features;
    std::vector<bool> swapped;  // per cell, row-major

    std::size_t n() const { return static_cast<std::size_t>(rows * cols); }
};

// Stands in for a frozen visual encoder: a fixed symbol code book and a
// fixed projection, both derived from a seed.
class VisionEncoder {
public:
    static constexpr std::size_t kPosDimsPerAxis = 8;
    static constexpr std::size_t kSymbolDims = 16;
    static constexpr std::size_t kSlots = 3;

    explicit VisionEncoder(std::size_t d = 64, std::uint64_t seed = 7);

    std::size_t d() const { return d_; }
    std::size_t raw_dims() const { return 2 * kPosDimsPerAxis + kSlots * kSymbolDims; }
    std::size_t content_offset() const { return 2 * kPosDimsPerAxis; }

    VisualGrid encode(const Table& table, const CorruptionSpec& spec, std::uint64_t seed) const;

    // Clean content channels for a cell string (slots past its length are 0).
    std::vector<double> content_code(const std::string& value) const;
    std::vector<double> position_code(int index) const;  // 1-based index
    // Symbol whose code is closest to slot 0 of a content vector.
    char nearest_symbol(std::span<const double> content) const;
    const Tensor& projection() const { return projection_; }

private:
    std::size_t d_;
    std::vector<std::vector<double>> symbols_;
    Tensor projection_;  // raw_dims x d
};

VisualGrid encode_vision(const Table& table, const CorruptionSpec& spec, std::uint64_t seed,
                         const VisionEncoder& encoder);

// ---------------------------------------------------------------------------
// Task instances.

struct Coord {
    int row = 0;  // 1-based
    int col = 0;
    bool operator==(const Coord&) const = default;
};

// Structured answer. Field use by kind:
//   TSR      rows, cols
//   TCE      coords = {query}, values = {cell}
//   RCE      coords = {(0, column)}, values = column cells top to bottom
//   TCR      values = queried strings, coords = their locations
//   LookupQA coords = {answer cell}, values = {cell}
struct Gold {
    int rows = 0;
    int cols = 0;
    std::vector<Coord> coords;
    std::vector<std::string> values;
    bool operator==(const Gold&) const = default;
};

struct TaskInstance {
    std::string id;
    TaskKind kind = TaskKind::TSR;
    Table table;
    std::vector<int> prompt;
    std::vector<int> target;  // ends with <eos>
    Gold gold;
    std::uint64_t vision_seed = 0;

    std::size_t item_count() const;
    bool operator==(const TaskInstance&) const = default;
};

class InfeasibleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Renders prompt and target in the kind's answer grammar. Throws
// InfeasibleError when the table cannot host the kind (e.g. no unique cell
// for TCR, fewer than 2 rows or columns for LookupQA).
TaskInstance make_instance(const Table& table, TaskKind kind, std::mt19937_64& rng);

// Parses answer tokens (up to the first <eos>) back into a Gold; nullopt if
// the tokens do not follow the kind's grammar. Only the answer fields are
// filled (TCR: coords; TSR: rows/cols; others: values).
std::optional<Gold> decode_answer(TaskKind kind, std::span<const int> tokens);

// Per-item correctness: one boolean per queried coordinate (TCR), per
// column cell (RCE), otherwise a single exact-match boolean. Malformed
// predictions score all-false.
std::vector<bool> score_instance(std::span<const int> prediction, const TaskInstance& instance);

// ---------------------------------------------------------------------------
// Datasets.

struct DatasetSpec {
    std::uint64_t seed = 0;
    TaskKind kind = TaskKind::TCR;
    std::string split = "train";
    std::size_t count = 0;
    TableBounds bounds;
};

// Instance i depends only on (seed, kind, split, i). Ids are stamped with the
// seed: "s<seed>-<kind>-<split>-<i>".
std::vector<TaskInstance> generate_dataset(const DatasetSpec& spec);

class DatasetFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One JSON object per line.
void write_dataset(const std::filesystem::path& path, std::span<const TaskInstance> instances);
std::vector<TaskInstance> read_dataset(const std::filesystem::path& path);
std::string instance_to_json_line(const TaskInstance& instance);
TaskInstance instance_from_json_line(const std::string& line);

}  // namespace diva::task
