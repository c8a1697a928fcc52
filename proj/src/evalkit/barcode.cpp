// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "diva/evalkit.hpp"

namespace diva::eval {

std::string group_name(BarcodeGroup g) {
    switch (g) {
        case BarcodeGroup::Win: return "win";
        case BarcodeGroup::Tie: return "tie";
        case BarcodeGroup::Loss: return "loss";
    }
    return "?";
}

std::string format_number(double v) {
    // Shortest text that parses back to the same double.
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<BarcodeColumn> barcode_columns(std::span<const PredictionRecord> text,
                                           std::span<const PredictionRecord> vision,
                                           std::span<const PredictionRecord> concat,
                                           std::span<const PredictionRecord> diva,
                                           bool both_wrong_only) {
    std::unordered_map<std::string, const PredictionRecord*> v, c, d;
    for (const auto& r : vision) v.emplace(r.instance_id, &r);
    for (const auto& r : concat) c.emplace(r.instance_id, &r);
    for (const auto& r : diva) d.emplace(r.instance_id, &r);
    if (v.size() != text.size() || c.size() != text.size() || d.size() != text.size())
        throw AlignmentError("barcode: record sets differ in size or repeat ids");

    std::vector<BarcodeColumn> cols;
    for (const auto& tr : text) {
        auto find = [&](auto& m) {
            auto it = m.find(tr.instance_id);
            if (it == m.end()) throw AlignmentError("barcode: id " + tr.instance_id + " unmatched");
            return it->second;
        };
        const PredictionRecord *vr = find(v), *cr = find(c), *dr = find(d);
        if (both_wrong_only && !(fully_wrong(tr) && fully_wrong(*vr))) continue;
        BarcodeColumn col;
        col.instance_id = tr.instance_id;
        col.text = tr.fraction();
        col.vision = vr->fraction();
        col.concat = cr->fraction();
        col.diva = dr->fraction();
        col.group = col.diva > col.concat   ? BarcodeGroup::Win
                    : col.diva == col.concat ? BarcodeGroup::Tie
                                             : BarcodeGroup::Loss;
        cols.push_back(std::move(col));
    }
    std::sort(cols.begin(), cols.end(), [](const BarcodeColumn& a, const BarcodeColumn& b) {
        if (a.group != b.group) return a.group < b.group;
        if (a.diva != b.diva) return a.diva > b.diva;
        return a.instance_id < b.instance_id;
    });
    return cols;
}

std::string barcode_csv(std::span<const BarcodeColumn> columns) {
    std::ostringstream os;
    os << "column,instance_id,group,text,vision,concat,diva\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        const auto& c = columns[i];
        os << i + 1 << ',' << c.instance_id << ',' << group_name(c.group) << ','
           << format_number(c.text) << ',' << format_number(c.vision) << ','
           << format_number(c.concat) << ',' << format_number(c.diva) << '\n';
    }
    return os.str();
}

std::string barcode_svg(std::span<const BarcodeColumn> columns, const std::string& title) {
    constexpr int kCell = 6, kRowH = 24, kLabelW = 70, kTop = 30;
    const char* labels[] = {"text", "vision", "concat", "diva"};
    const int width = kLabelW + static_cast<int>(columns.size()) * kCell + 10;
    const int height = kTop + 4 * kRowH + 30;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"monospace\" font-size=\"11\">\n";
    os << "<text x=\"4\" y=\"16\">" << title << " (" << columns.size() << " instances)</text>\n";
    for (int row = 0; row < 4; ++row)
        os << "<text x=\"4\" y=\"" << kTop + row * kRowH + 16 << "\">" << labels[row] << "</text>\n";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        const auto& c = columns[i];
        const double vals[] = {c.text, c.vision, c.concat, c.diva};
        for (int row = 0; row < 4; ++row) {
            // White for 0, black for fully correct.
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - vals[row])));
            os << "<rect x=\"" << kLabelW + static_cast<int>(i) * kCell << "\" y=\""
               << kTop + row * kRowH << "\" width=\"" << kCell << "\" height=\"" << kRowH - 2
               << "\" fill=\"rgb(" << shade << ',' << shade << ',' << shade << ")\"/>\n";
        }
    }
    // Divider lines between groups and group labels.
    std::size_t start = 0;
    for (std::size_t i = 0; i <= columns.size(); ++i) {
        if (i < columns.size() && columns[i].group == columns[start].group) continue;
        if (i > start) {
            const int x0 = kLabelW + static_cast<int>(start) * kCell;
            os << "<text x=\"" << x0 << "\" y=\"" << kTop + 4 * kRowH + 16 << "\">"
               << group_name(columns[start].group) << "</text>\n";
            if (i < columns.size()) {
                const int x = kLabelW + static_cast<int>(i) * kCell;
                os << "<line x1=\"" << x << "\" y1=\"" << kTop - 4 << "\" x2=\"" << x << "\" y2=\""
                   << kTop + 4 * kRowH << "\" stroke=\"red\" stroke-width=\"1\"/>\n";
            }
        }
        start = i;
    }
    os << "</svg>\n";
    return os.str();
}

void barcode_export(std::span<const BarcodeColumn> columns, const std::filesystem::path& svg,
                    const std::filesystem::path& csv, const std::string& title) {
    auto write = [](const std::filesystem::path& p, const std::string& body) {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f || !(f << body)) throw std::runtime_error("barcode: cannot write " + p.string());
    };
    write(svg, barcode_svg(columns, title));
    write(csv, barcode_csv(columns));
}

}  // namespace diva::eval
