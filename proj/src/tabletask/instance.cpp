// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "diva/tabletask.hpp"

namespace diva::task {

using lm::Vocab;

namespace {

void append_cell(std::vector<int>& out, const std::string& value) {
    const Vocab& v = Vocab::standard();
    for (char ch : value) out.push_back(v.id(std::string(1, ch)));
}

// Consumes a run of cell symbols starting at i; empty if none or too long.
std::optional<std::string> read_cell(std::span<const int> t, std::size_t& i) {
    const Vocab& v = Vocab::standard();
    std::string s;
    while (i < t.size() && v.is_symbol(t[i])) s += v.token(t[i++]);
    if (s.empty() || s.size() > VisionEncoder::kSlots) return std::nullopt;
    return s;
}

}  // namespace

std::size_t TaskInstance::item_count() const {
    switch (kind) {
        case TaskKind::TCR: return gold.coords.size();
        case TaskKind::RCE: return gold.values.size();
        default: return 1;
    }
}

TaskInstance make_instance(const Table& table, TaskKind kind, std::mt19937_64& rng) {
    if (table.rows < 1 || table.cols < 1 ||
        table.cells.size() != static_cast<std::size_t>(table.rows * table.cols))
        throw InfeasibleError("make_instance: malformed table");
    if (table.rows > Vocab::kMaxCoord || table.cols > Vocab::kMaxCoord)
        throw InfeasibleError("make_instance: table larger than the coordinate vocabulary");

    const Vocab& v = Vocab::standard();
    TaskInstance inst;
    inst.kind = kind;
    inst.table = table;
    inst.prompt.push_back(v.id(kind_name(kind)));
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };

    switch (kind) {
        case TaskKind::TSR:
            inst.target = {v.row_token(table.rows), v.col_token(table.cols)};
            inst.gold.rows = table.rows;
            inst.gold.cols = table.cols;
            break;
        case TaskKind::TCE: {
            const int r = pick(table.rows), c = pick(table.cols);
            inst.prompt.push_back(v.row_token(r + 1));
            inst.prompt.push_back(v.col_token(c + 1));
            append_cell(inst.target, table.cell(r, c));
            inst.gold.coords = {{r + 1, c + 1}};
            inst.gold.values = {table.cell(r, c)};
            break;
        }
        case TaskKind::RCE: {
            const int c = pick(table.cols);
            inst.prompt.push_back(v.col_token(c + 1));
            inst.gold.coords = {{0, c + 1}};
            for (int r = 0; r < table.rows; ++r) {
                if (r > 0) inst.target.push_back(v.row_sep());
                append_cell(inst.target, table.cell(r, c));
                inst.gold.values.push_back(table.cell(r, c));
            }
            break;
        }
        case TaskKind::TCR: {
            std::vector<int> unique;
            for (int i = 0; i < static_cast<int>(table.cells.size()); ++i)
                if (table.occurrences(table.cells[static_cast<std::size_t>(i)]) == 1)
                    unique.push_back(i);
            if (unique.empty()) throw InfeasibleError("TCR: no cell string is unique in the table");
            std::shuffle(unique.begin(), unique.end(), rng);
            const int q = std::min<int>(1 + pick(3), static_cast<int>(unique.size()));
            for (int k = 0; k < q; ++k) {
                const int cell = unique[static_cast<std::size_t>(k)];
                const int r = cell / table.cols, c = cell % table.cols;
                if (k > 0) inst.prompt.push_back(v.query_sep());
                append_cell(inst.prompt, table.cells[static_cast<std::size_t>(cell)]);
                inst.target.push_back(v.row_token(r + 1));
                inst.target.push_back(v.col_token(c + 1));
                inst.gold.values.push_back(table.cells[static_cast<std::size_t>(cell)]);
                inst.gold.coords.push_back({r + 1, c + 1});
            }
            break;
        }
        case TaskKind::LookupQA: {
            if (table.rows < 2 || table.cols < 2)
                throw InfeasibleError("LookupQA: needs at least 2 rows and 2 columns");
            const int r = 1 + pick(table.rows - 1), c = 1 + pick(table.cols - 1);
            append_cell(inst.prompt, table.cell(r, 0));
            inst.prompt.push_back(v.query_sep());
            append_cell(inst.prompt, table.cell(0, c));
            append_cell(inst.target, table.cell(r, c));
            inst.gold.coords = {{r + 1, c + 1}};
            inst.gold.values = {table.cell(r, c)};
            break;
        }
    }
    inst.target.push_back(v.eos());
    return inst;
}

std::optional<Gold> decode_answer(TaskKind kind, std::span<const int> tokens) {
    const Vocab& v = Vocab::standard();
    const auto eos = std::find(tokens.begin(), tokens.end(), v.eos());
    const std::span<const int> t(tokens.begin(), eos);
    Gold g;
    std::size_t i = 0;
    switch (kind) {
        case TaskKind::TSR: {
            if (t.size() != 2) return std::nullopt;
            const auto r = v.row_index(t[0]), c = v.col_index(t[1]);
            if (!r || !c) return std::nullopt;
            g.rows = *r;
            g.cols = *c;
            return g;
        }
        case TaskKind::TCE:
        case TaskKind::LookupQA: {
            auto cell = read_cell(t, i);
            if (!cell || i != t.size()) return std::nullopt;
            g.values = {*cell};
            return g;
        }
        case TaskKind::RCE:
            while (true) {
                auto cell = read_cell(t, i);
                if (!cell) return std::nullopt;
                g.values.push_back(*cell);
                if (i == t.size()) return g;
                if (t[i] != v.row_sep()) return std::nullopt;
                ++i;
            }
        case TaskKind::TCR:
            if (t.empty() || t.size() % 2 != 0) return std::nullopt;
            for (; i < t.size(); i += 2) {
                const auto r = v.row_index(t[i]), c = v.col_index(t[i + 1]);
                if (!r || !c) return std::nullopt;
                g.coords.push_back({*r, *c});
            }
            return g;
    }
    return std::nullopt;
}

std::vector<bool> score_instance(std::span<const int> prediction, const TaskInstance& instance) {
    std::vector<bool> items(instance.item_count(), false);
    const auto got = decode_answer(instance.kind, prediction);
    if (!got) return items;
    const Gold& gold = instance.gold;
    switch (instance.kind) {
        case TaskKind::TSR:
            items[0] = got->rows == gold.rows && got->cols == gold.cols;
            break;
        case TaskKind::TCE:
        case TaskKind::LookupQA:
            items[0] = got->values[0] == gold.values[0];
            break;
        case TaskKind::RCE:
            for (std::size_t k = 0; k < items.size() && k < got->values.size(); ++k)
                items[k] = got->values[k] == gold.values[k];
            break;
        case TaskKind::TCR:
            for (std::size_t k = 0; k < items.size() && k < got->coords.size(); ++k)
                items[k] = got->coords[k] == gold.coords[k];
            break;
    }
    return items;
}

}  // namespace diva::task
