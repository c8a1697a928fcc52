// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "diva/tabletask.hpp"

namespace diva::task {

using lm::Vocab;

std::string kind_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::TSR: return "TSR";
        case TaskKind::TCE: return "TCE";
        case TaskKind::RCE: return "RCE";
        case TaskKind::TCR: return "TCR";
        case TaskKind::LookupQA: return "LQA";
    }
    return "?";
}

TaskKind parse_kind(const std::string& name) {
    for (TaskKind k : kAllKinds)
        if (kind_name(k) == name) return k;
    if (name == "LookupQA") return TaskKind::LookupQA;
    throw ConfigError("unknown task kind '" + name + "'");
}

void TableBounds::validate() const {
    auto range = [](int lo, int hi, int cap, const char* what) {
        if (lo < 1 || hi < lo || hi > cap)
            throw ConfigError(std::string("table bounds: ") + what + " range [" +
                              std::to_string(lo) + ", " + std::to_string(hi) +
                              "] outside [1, " + std::to_string(cap) + "]");
    };
    range(min_rows, max_rows, Vocab::kMaxCoord, "rows");
    range(min_cols, max_cols, Vocab::kMaxCoord, "cols");
    range(min_cell_len, max_cell_len, static_cast<int>(VisionEncoder::kSlots), "cell length");
}

int Table::occurrences(const std::string& value) const {
    return static_cast<int>(std::count(cells.begin(), cells.end(), value));
}

namespace {

std::string random_cell(std::mt19937_64& rng, const TableBounds& b) {
    const std::string& alpha = Vocab::alphabet();
    std::uniform_int_distribution<int> len(b.min_cell_len, b.max_cell_len);
    std::uniform_int_distribution<std::size_t> sym(0, alpha.size() - 1);
    std::string s(static_cast<std::size_t>(len(rng)), ' ');
    for (char& ch : s) ch = alpha[sym(rng)];
    return s;
}

}  // namespace

Table gen_table(std::mt19937_64& rng, const TableBounds& bounds) {
    bounds.validate();
    Table t;
    t.rows = std::uniform_int_distribution<int>(bounds.min_rows, bounds.max_rows)(rng);
    t.cols = std::uniform_int_distribution<int>(bounds.min_cols, bounds.max_cols)(rng);
    t.cells.resize(static_cast<std::size_t>(t.rows * t.cols));
    for (auto& c : t.cells) c = random_cell(rng, bounds);

    // Header row and header column must be duplicate-free. With at least 36
    // one-symbol strings available and at most 12 headers, resampling ends.
    auto dedup = [&](auto index, int count) {
        std::unordered_set<std::string> seen;
        for (int i = 0; i < count; ++i) {
            std::string& cell = t.cells[index(i)];
            while (!seen.insert(cell).second) cell = random_cell(rng, bounds);
        }
    };
    dedup([&](int c) { return static_cast<std::size_t>(c); }, t.cols);
    // Column 0 without the corner, which already belongs to the header row.
    std::unordered_set<std::string> seen{t.cells[0]};
    for (int r = 1; r < t.rows; ++r) {
        std::string& cell = t.cells[static_cast<std::size_t>(r * t.cols)];
        while (!seen.insert(cell).second) cell = random_cell(rng, bounds);
    }
    return t;
}

std::vector<int> serialize_text(const Table& table) {
    const Vocab& v = Vocab::standard();
    std::vector<int> out;
    for (int r = 0; r < table.rows; ++r) {
        out.push_back(v.row_sep());
        for (int c = 0; c < table.cols; ++c) {
            if (c > 0) out.push_back(v.col_sep());
            for (char ch : table.cell(r, c)) out.push_back(v.id(std::string(1, ch)));
        }
    }
    return out;
}

Table parse_text(std::span<const int> tokens) {
    const Vocab& v = Vocab::standard();
    auto fail = [](const std::string& why) {
        throw std::invalid_argument("parse_text: " + why);
    };
    if (tokens.empty()) return {};
    if (tokens[0] != v.row_sep()) fail("expected <row> at position 0");

    std::vector<std::vector<std::string>> grid;
    std::string cell;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const int t = tokens[i];
        if (t == v.row_sep()) {
            if (!grid.empty()) {
                if (cell.empty()) fail("empty cell before position " + std::to_string(i));
                grid.back().push_back(cell);
            }
            grid.emplace_back();
            cell.clear();
        } else if (t == v.col_sep()) {
            if (cell.empty()) fail("empty cell before position " + std::to_string(i));
            grid.back().push_back(cell);
            cell.clear();
        } else if (v.is_symbol(t)) {
            cell += v.token(t);
        } else {
            fail("unexpected token id " + std::to_string(t) + " at position " + std::to_string(i));
        }
    }
    if (cell.empty()) fail("empty trailing cell");
    grid.back().push_back(cell);

    Table out;
    out.rows = static_cast<int>(grid.size());
    out.cols = static_cast<int>(grid[0].size());
    for (const auto& row : grid) {
        if (static_cast<int>(row.size()) != out.cols) fail("ragged rows");
        out.cells.insert(out.cells.end(), row.begin(), row.end());
    }
    return out;
}

std::string render_table(const Table& table) {
    std::size_t w = 1;
    for (const auto& c : table.cells) w = std::max(w, c.size());
    std::ostringstream os;
    auto rule = [&] {
        os << '+';
        for (int c = 0; c < table.cols; ++c) os << std::string(w + 2, '-') << '+';
        os << '\n';
    };
    rule();
    for (int r = 0; r < table.rows; ++r) {
        os << '|';
        for (int c = 0; c < table.cols; ++c) {
            const auto& s = table.cell(r, c);
            os << ' ' << s << std::string(w - s.size() + 1, ' ') << '|';
        }
        os << '\n';
        rule();
    }
    return os.str();
}

}  // namespace diva::task
