// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "diva/evalkit.hpp"

namespace diva::eval {

std::size_t PredictionRecord::correct_count() const {
    return static_cast<std::size_t>(std::count(correct.begin(), correct.end(), true));
}

double PredictionRecord::fraction() const {
    if (correct.empty()) return 0.0;
    return static_cast<double>(correct_count()) / static_cast<double>(correct.size());
}

bool PredictionRecord::all_correct() const {
    return !correct.empty() && correct_count() == correct.size();
}

std::size_t decode_budget(const task::TaskInstance& instance) { return instance.target.size() + 4; }

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads; each index is written
// by exactly one worker, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += jobs) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

PredictionRecord score(const task::TaskInstance& inst, const Predictor& predictor,
                       const std::string& method, const std::string& modality) {
    PredictionRecord r;
    r.instance_id = inst.id;
    r.method = method;
    r.modality = modality;
    r.kind = inst.kind;
    try {
        r.tokens = predictor(inst);
        r.correct = task::score_instance(r.tokens, inst);
    } catch (const lm::LengthError&) {
        r.overflow = true;
        r.tokens.clear();
        r.correct.assign(inst.item_count(), false);
    }
    return r;
}

}  // namespace

std::vector<PredictionRecord> evaluate(std::span<const task::TaskInstance> instances,
                                       const Predictor& predictor, const std::string& method,
                                       const std::string& modality, std::size_t jobs) {
    std::vector<PredictionRecord> out(instances.size());
    parallel_for(instances.size(), jobs, [&](std::size_t i) {
        out[i] = score(instances[i], predictor, method, modality);
    });
    return out;
}

std::vector<PredictionRecord> evaluate(std::span<const trainer::Prepared> prepared,
                                       const ModelSetup& setup, std::size_t jobs) {
    if (!setup.lm) throw ConfigError("evaluate: model setup has no LM");
    setup.params.parameters().set_requires_grad(false);
    const std::string method = trainer::method_name(setup.config.method);
    const std::string modality = trainer::modality_name(setup.config.modality);
    std::vector<PredictionRecord> out(prepared.size());
    parallel_for(prepared.size(), jobs, [&](std::size_t i) {
        const trainer::Prepared& p = prepared[i];
        const Predictor predictor = [&](const task::TaskInstance& inst) {
            const Tensor prefix = trainer::build_context(p, setup.config, setup.params, *setup.lm);
            return lm::greedy_decode(*setup.lm, prefix, inst.prompt, decode_budget(inst));
        };
        out[i] = score(*p.instance, predictor, method, modality);
    });
    return out;
}

void write_records(const std::filesystem::path& path, std::span<const PredictionRecord> records) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write records " + path.string());
    for (const auto& r : records) {
        nlohmann::json j = {{"id", r.instance_id},     {"method", r.method},
                            {"modality", r.modality},  {"kind", task::kind_name(r.kind)},
                            {"correct", r.correct},    {"tokens", r.tokens},
                            {"overflow", r.overflow}};
        f << j.dump() << '\n';
    }
}

std::vector<PredictionRecord> read_records(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read records " + path.string());
    std::vector<PredictionRecord> out;
    std::string line;
    for (std::size_t n = 1; std::getline(f, line); ++n) {
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            PredictionRecord r;
            r.instance_id = j.at("id").get<std::string>();
            r.method = j.at("method").get<std::string>();
            r.modality = j.at("modality").get<std::string>();
            r.kind = task::parse_kind(j.at("kind").get<std::string>());
            r.correct = j.at("correct").get<std::vector<bool>>();
            r.tokens = j.at("tokens").get<std::vector<int>>();
            r.overflow = j.at("overflow").get<bool>();
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw task::DatasetFormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace diva::eval
