// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <sstream>

#include "diva/evalkit.hpp"

namespace diva::eval {

std::map<std::string, double> kind_scores(std::span<const PredictionRecord> records) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
    for (const auto& r : records) {
        auto& [hit, total] = counts[task::kind_name(r.kind)];
        hit += r.correct_count();
        total += r.correct.size();
    }
    std::map<std::string, double> out;
    for (const auto& [kind, c] : counts)
        if (c.second > 0) out[kind] = static_cast<double>(c.first) / static_cast<double>(c.second);
    return out;
}

double average_score(const std::map<std::string, double>& scores) {
    if (scores.empty()) return 0.0;
    double s = 0.0;
    for (const auto& [k, v] : scores) s += v;
    return s / static_cast<double>(scores.size());
}

SummaryTable summarize_grid(std::vector<std::string> label_names,
                            const std::vector<std::vector<std::string>>& grid,
                            std::span<const RunSummary> runs, std::vector<std::string> kinds) {
    SummaryTable t;
    t.label_names = std::move(label_names);
    t.kinds = std::move(kinds);
    for (const auto& labels : grid) {
        SummaryRow row;
        row.labels = labels;
        std::vector<const RunSummary*> hits;
        for (const auto& r : runs)
            if (r.labels == labels) hits.push_back(&r);
        if (hits.empty()) {
            std::string key;
            for (std::size_t i = 0; i < labels.size(); ++i)
                key += (i ? "," : "") + (i < t.label_names.size() ? t.label_names[i] + "=" : "") +
                       labels[i];
            t.warnings.push_back("missing run for " + key);
            t.rows.push_back(std::move(row));
            continue;
        }
        row.missing = false;
        row.seeds = hits.size();
        std::vector<double> avgs;
        for (const auto* r : hits) avgs.push_back(average_score(r->scores));
        for (const auto& kind : t.kinds) {
            double s = 0.0;
            std::size_t n = 0;
            for (const auto* r : hits) {
                auto it = r->scores.find(kind);
                if (it != r->scores.end()) {
                    s += it->second;
                    ++n;
                }
            }
            if (n == hits.size()) row.kind_mean[kind] = s / static_cast<double>(n);
        }
        double sum = 0.0;
        for (double a : avgs) sum += a;
        row.avg_mean = sum / static_cast<double>(avgs.size());
        row.avg_min = *std::min_element(avgs.begin(), avgs.end());
        row.avg_max = *std::max_element(avgs.begin(), avgs.end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string summary_csv(const SummaryTable& t) {
    std::ostringstream os;
    for (const auto& n : t.label_names) os << n << ',';
    for (const auto& k : t.kinds) os << k << ',';
    os << "avg_mean,avg_min,avg_max,seeds\n";
    for (const auto& row : t.rows) {
        for (const auto& l : row.labels) os << l << ',';
        for (const auto& k : t.kinds) {
            auto it = row.kind_mean.find(k);
            if (!row.missing && it != row.kind_mean.end()) os << format_number(it->second);
            os << ',';
        }
        if (row.missing)
            os << ",,,0\n";
        else
            os << format_number(row.avg_mean) << ',' << format_number(row.avg_min) << ','
               << format_number(row.avg_max) << ',' << row.seeds << '\n';
    }
    return os.str();
}

std::vector<std::vector<std::string>> ablation_grid() {
    return {
        {"on", "text", "text"},
        {"on", "vision", "vision"},
        {"on", "text", "vision"},
        {"off", "vision", "text"},
        {"on", "vision", "text"},
    };
}

}  // namespace diva::eval
