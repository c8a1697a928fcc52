// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <nlohmann/json.hpp>

#include "diva/tabletask.hpp"

namespace diva::task {

using nlohmann::json;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_string(std::uint64_t h, const std::string& s) {
    for (unsigned char ch : s) h = splitmix(h ^ ch);
    return h;
}

}  // namespace

std::vector<TaskInstance> generate_dataset(const DatasetSpec& spec) {
    spec.bounds.validate();
    if (spec.kind == TaskKind::LookupQA && (spec.bounds.max_rows < 2 || spec.bounds.max_cols < 2))
        throw ConfigError("LookupQA needs tables with at least 2 rows and 2 columns");
    const std::string kind = kind_name(spec.kind);
    const std::uint64_t base = mix_string(mix_string(splitmix(spec.seed), kind), spec.split);

    std::vector<TaskInstance> out;
    out.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        std::mt19937_64 rng(splitmix(base ^ splitmix(i)));
        // Resample tables that cannot host the kind; bounded for safety.
        for (int attempt = 0;; ++attempt) {
            if (attempt == 1000)
                throw ConfigError("dataset: could not build a feasible " + kind + " instance");
            const Table table = gen_table(rng, spec.bounds);
            try {
                TaskInstance inst = make_instance(table, spec.kind, rng);
                inst.id = "s" + std::to_string(spec.seed) + "-" + kind + "-" + spec.split + "-" +
                          std::to_string(i);
                inst.vision_seed = rng();
                out.push_back(std::move(inst));
                break;
            } catch (const InfeasibleError&) {
            }
        }
    }
    return out;
}

std::string instance_to_json_line(const TaskInstance& inst) {
    json grid = json::array();
    for (int r = 0; r < inst.table.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < inst.table.cols; ++c) row.push_back(inst.table.cell(r, c));
        grid.push_back(std::move(row));
    }
    json coords = json::array();
    for (const auto& c : inst.gold.coords) coords.push_back({c.row, c.col});
    json j = {
        {"id", inst.id},
        {"kind", kind_name(inst.kind)},
        {"table", grid},
        {"prompt", inst.prompt},
        {"target", inst.target},
        {"gold", {{"rows", inst.gold.rows}, {"cols", inst.gold.cols}, {"coords", coords},
                  {"values", inst.gold.values}}},
        // As a string: JSON readers commonly lose precision above 2^53.
        {"vision_seed", std::to_string(inst.vision_seed)},
    };
    return j.dump();
}

TaskInstance instance_from_json_line(const std::string& line) {
    const json j = json::parse(line);
    TaskInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.kind = parse_kind(j.at("kind").get<std::string>());
    const auto& grid = j.at("table");
    inst.table.rows = static_cast<int>(grid.size());
    inst.table.cols = grid.empty() ? 0 : static_cast<int>(grid[0].size());
    for (const auto& row : grid) {
        if (static_cast<int>(row.size()) != inst.table.cols)
            throw DatasetFormatError("ragged table grid");
        for (const auto& cell : row) inst.table.cells.push_back(cell.get<std::string>());
    }
    inst.prompt = j.at("prompt").get<std::vector<int>>();
    inst.target = j.at("target").get<std::vector<int>>();
    const auto& g = j.at("gold");
    inst.gold.rows = g.at("rows").get<int>();
    inst.gold.cols = g.at("cols").get<int>();
    for (const auto& c : g.at("coords")) inst.gold.coords.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
    inst.gold.values = g.at("values").get<std::vector<std::string>>();
    inst.vision_seed = std::stoull(j.at("vision_seed").get<std::string>());
    return inst;
}

void write_dataset(const std::filesystem::path& path, std::span<const TaskInstance> instances) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write dataset " + path.string());
    for (const auto& inst : instances) f << instance_to_json_line(inst) << '\n';
    if (!f) throw std::runtime_error("write failed for dataset " + path.string());
}

std::vector<TaskInstance> read_dataset(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read dataset " + path.string());
    std::vector<TaskInstance> out;
    std::string line;
    for (std::size_t n = 1; std::getline(f, line); ++n) {
        if (line.empty()) continue;
        try {
            out.push_back(instance_from_json_line(line));
        } catch (const std::exception& e) {
            throw DatasetFormatError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace diva::task
