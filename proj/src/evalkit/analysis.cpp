// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <unordered_map>

#include "diva/evalkit.hpp"

namespace diva::eval {

namespace {

using Index = std::unordered_map<std::string, const PredictionRecord*>;

Index index_by_id(std::span<const PredictionRecord> records, const char* what) {
    Index idx;
    for (const auto& r : records)
        if (!idx.emplace(r.instance_id, &r).second)
            throw AlignmentError(std::string(what) + ": duplicate id " + r.instance_id);
    return idx;
}

void require_same_ids(const Index& a, const Index& b, const char* what) {
    if (a.size() != b.size())
        throw AlignmentError(std::string(what) + ": record sets have " + std::to_string(a.size()) +
                             " and " + std::to_string(b.size()) + " ids");
    for (const auto& [id, r] : a)
        if (!b.contains(id)) throw AlignmentError(std::string(what) + ": id " + id + " unmatched");
}

std::vector<std::string> sorted_ids(const Index& idx) {
    std::vector<std::string> ids;
    ids.reserve(idx.size());
    for (const auto& [id, r] : idx) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace

ComplementarityReport complementarity(std::span<const PredictionRecord> text,
                                      std::span<const PredictionRecord> vision) {
    const Index t = index_by_id(text, "complementarity");
    const Index v = index_by_id(vision, "complementarity");
    require_same_ids(t, v, "complementarity");

    ComplementarityReport rep;
    rep.n = t.size();
    if (rep.n == 0) return rep;
    std::size_t tc = 0, vc = 0, to = 0, vo = 0, bc = 0, bw = 0;
    for (const auto& [id, tr] : t) {
        const bool a = tr->all_correct(), b = v.at(id)->all_correct();
        tc += a;
        vc += b;
        to += a && !b;
        vo += !a && b;
        bc += a && b;
        bw += !a && !b;
    }
    const double n = static_cast<double>(rep.n);
    rep.text_accuracy = static_cast<double>(tc) / n;
    rep.vision_accuracy = static_cast<double>(vc) / n;
    rep.text_only = static_cast<double>(to) / n;
    rep.vision_only = static_cast<double>(vo) / n;
    rep.both_correct = static_cast<double>(bc) / n;
    rep.both_wrong = static_cast<double>(bw) / n;
    rep.any_correct = static_cast<double>(rep.n - bw) / n;
    if (rep.n > bw) rep.one_modality_only = static_cast<double>(to + vo) / static_cast<double>(rep.n - bw);
    return rep;
}

bool fully_wrong(const PredictionRecord& r) {
    if (r.kind == task::TaskKind::TCR) return r.correct_count() == 0;
    return !r.all_correct();
}

RecoveryReport recovery_rate(std::span<const PredictionRecord> text,
                             std::span<const PredictionRecord> vision,
                             std::span<const NamedRecords> fused) {
    const Index t = index_by_id(text, "recovery");
    const Index v = index_by_id(vision, "recovery");
    require_same_ids(t, v, "recovery");

    RecoveryReport rep;
    for (const auto& id : sorted_ids(t))
        if (fully_wrong(*t.at(id)) && fully_wrong(*v.at(id))) rep.subset_ids.push_back(id);
    rep.defined = !rep.subset_ids.empty();

    for (const auto& [name, records] : fused) {
        const Index f = index_by_id(records, "recovery");
        require_same_ids(t, f, "recovery");
        MethodRecovery m;
        m.method = name;
        for (const auto& id : rep.subset_ids) {
            const PredictionRecord& r = *f.at(id);
            if (r.kind == task::TaskKind::TCR) {
                m.recovered += r.correct_count();
                m.total += r.correct.size();
            } else {
                m.recovered += r.all_correct();
                m.total += 1;
            }
        }
        m.defined = m.total > 0;
        if (m.defined) m.fraction = static_cast<double>(m.recovered) / static_cast<double>(m.total);
        rep.methods.push_back(std::move(m));
    }
    return rep;
}

}  // namespace diva::eval
