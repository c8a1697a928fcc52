// SPDX-License-Identifier: Apache-2.0

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "diva/cli.hpp"

namespace diva::cli {

namespace pt = boost::property_tree;

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& s, const std::string& key) {
    std::vector<std::string> parts;
    boost::split(parts, s, boost::is_any_of(","));
    std::vector<T> out;
    for (auto& p : parts) {
        boost::trim(p);
        if (p.empty()) continue;
        try {
            if constexpr (std::is_same_v<T, std::string>)
                out.push_back(p);
            else if constexpr (std::is_floating_point_v<T>)
                out.push_back(static_cast<T>(std::stod(p)));
            else
                out.push_back(static_cast<T>(std::stoull(p)));
        } catch (const std::exception&) {
            throw ConfigError("config: bad list element '" + p + "' in " + key);
        }
    }
    return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        os << (i ? "," : "");
        if constexpr (std::is_floating_point_v<T>)
            os << eval::format_number(v[i]);
        else
            os << v[i];
    }
    return os.str();
}

// Visits every known key in both directions so parse and dump cannot drift.
template <typename Io>
void visit(ExperimentConfig& c, Io&& io) {
    io("paths", "data", c.paths.data);
    io("paths", "runs", c.paths.runs);
    io("paths", "reports", c.paths.reports);

    io("tables", "min_rows", c.bounds.min_rows);
    io("tables", "max_rows", c.bounds.max_rows);
    io("tables", "min_cols", c.bounds.min_cols);
    io("tables", "max_cols", c.bounds.max_cols);
    io("tables", "min_cell_len", c.bounds.min_cell_len);
    io("tables", "max_cell_len", c.bounds.max_cell_len);

    io("corruption", "content_noise_std", c.corruption.content_noise_std);
    io("corruption", "symbol_swap_prob", c.corruption.symbol_swap_prob);
    io("vision", "encoder_seed", c.encoder_seed);

    io("data", "seed", c.data.seed);
    io("data", "kinds", c.data.kinds);
    io("data", "pretrain_per_kind", c.data.pretrain_per_kind);
    io("data", "heldout_per_kind", c.data.heldout_per_kind);
    io("data", "train_per_kind", c.data.train_per_kind);
    io("data", "eval_per_kind", c.data.eval_per_kind);

    io("lm", "d", c.lm.model.d);
    io("lm", "layers", c.lm.model.layers);
    io("lm", "heads", c.lm.model.heads);
    io("lm", "ffn_mult", c.lm.model.ffn_mult);
    io("lm", "max_len", c.lm.model.max_len);
    io("lm", "init_std", c.lm.model.init_std);
    io("lm", "steps", c.lm.train.steps);
    io("lm", "batch", c.lm.train.batch);
    io("lm", "lr", c.lm.train.lr);
    io("lm", "warmup", c.lm.train.warmup);
    io("lm", "max_grad_norm", c.lm.train.max_grad_norm);
    io("lm", "log_every", c.lm.train.log_every);
    io("lm", "seed", c.lm.train.seed);
    io("lm", "pretrain_text", c.lm.text);
    io("lm", "pretrain_vision", c.lm.vision);

    io("fusion", "n_layers", c.train.n_layers);
    io("fusion", "n_heads", c.train.n_heads);
    io("fusion", "ffn_mult", c.train.ffn_mult);
    io("fusion", "g0", c.train.g0);
    io("fusion", "init_std", c.train.init_std);
    io("fusion", "k_queries", c.train.k_queries);
    io("fusion", "adapter_hidden", c.train.adapter_hidden);

    io("train", "lr", c.train.lr);
    io("train", "batch", c.train.batch);
    io("train", "steps", c.train.steps);
    io("train", "max_grad_norm", c.train.max_grad_norm);
    io("train", "checkpoint_every", c.train.checkpoint_every);

    io("experiment", "seeds", c.seeds);
    io("experiment", "g0_grid", c.g0_grid);
    io("experiment", "depth_grid", c.depth_grid);
    io("experiment", "analysis_kind", c.analysis_kind);
    io("experiment", "jobs", c.jobs);
}

struct Reader {
    const pt::ptree& tree;
    std::set<std::string>& seen;

    template <typename T>
    void operator()(const char* section, const char* key, T& value) {
        const std::string path = std::string(section) + "." + key;
        seen.insert(path);
        const auto node = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'));
        if (!node) return;
        std::string raw = boost::trim_copy(*node);
        try {
            if constexpr (std::is_same_v<T, std::filesystem::path> || std::is_same_v<T, std::string>) {
                value = raw;
            } else if constexpr (std::is_same_v<T, bool>) {
                if (raw == "true" || raw == "1") value = true;
                else if (raw == "false" || raw == "0") value = false;
                else throw ConfigError("expected true or false");
            } else if constexpr (std::is_same_v<T, std::vector<task::TaskKind>>) {
                value.clear();
                for (const auto& k : parse_list<std::string>(raw, path)) value.push_back(task::parse_kind(k));
            } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                value = parse_list<double>(raw, path);
            } else if constexpr (std::is_same_v<T, std::vector<std::uint64_t>>) {
                value = parse_list<std::uint64_t>(raw, path);
            } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
                value = parse_list<std::size_t>(raw, path);
            } else if constexpr (std::is_floating_point_v<T>) {
                std::size_t used = 0;
                value = std::stod(raw, &used);
                if (used != raw.size()) throw ConfigError("trailing characters");
            } else if constexpr (std::is_signed_v<T>) {
                std::size_t used = 0;
                value = static_cast<T>(std::stoll(raw, &used));
                if (used != raw.size()) throw ConfigError("trailing characters");
            } else {
                std::size_t used = 0;
                if (!raw.empty() && raw[0] == '-') throw ConfigError("must be non-negative");
                value = static_cast<T>(std::stoull(raw, &used));
                if (used != raw.size()) throw ConfigError("trailing characters");
            }
        } catch (const std::exception& e) {
            throw ConfigError("config: bad value '" + raw + "' for " + path + " (" + e.what() + ")");
        }
    }
};

struct Writer {
    std::ostringstream& os;
    std::string section;

    template <typename T>
    void operator()(const char* sec, const char* key, T& value) {
        if (section != sec) {
            if (!section.empty()) os << '\n';
            section = sec;
            os << '[' << sec << "]\n";
        }
        os << key << " = ";
        if constexpr (std::is_same_v<T, std::filesystem::path>) {
            os << value.string();
        } else if constexpr (std::is_same_v<T, bool>) {
            os << (value ? "true" : "false");
        } else if constexpr (std::is_same_v<T, std::vector<task::TaskKind>>) {
            std::vector<std::string> names;
            for (auto k : value) names.push_back(task::kind_name(k));
            os << join(names);
        } else if constexpr (requires { value.begin(); } && !std::is_same_v<T, std::string>) {
            os << join(value);
        } else if constexpr (std::is_floating_point_v<T>) {
            os << eval::format_number(value);
        } else {
            os << value;
        }
        os << '\n';
    }
};

}  // namespace

void ExperimentConfig::validate() const {
    bounds.validate();
    corruption.validate();
    lm.model.validate();
    if (data.kinds.empty()) throw ConfigError("config: data.kinds is empty");
    if (seeds.empty()) throw ConfigError("config: experiment.seeds is empty");
    if (!lm.text && !lm.vision) throw ConfigError("config: the LM needs at least one pretraining modality");
    if (lm.train.batch == 0) throw ConfigError("config: lm.batch must be positive");
    if (train.batch == 0) throw ConfigError("config: train.batch must be positive");
    if (jobs == 0) throw ConfigError("config: experiment.jobs must be positive");
    task::parse_kind(analysis_kind);
    resampler::DivaConfig dc = train.diva_config(lm.model.d);
    dc.validate();
    for (double g : g0_grid)
        if (!(g >= 0.0)) throw ConfigError("config: g0_grid entries must be >= 0");
    for (std::size_t n : depth_grid)
        if (n == 0) throw ConfigError("config: depth_grid entries must be >= 1");
    for (const auto* p : {&paths.data, &paths.runs, &paths.reports})
        if (p->empty()) throw ConfigError("config: empty path");
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    ExperimentConfig c = default_config();
    std::set<std::string> known;
    visit(c, Reader{tree, known});
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("config: key '" + section + "' outside any section");
        for (const auto& [key, value] : body)
            if (!known.contains(section + "." + key))
                throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path.string());
    return parse_config(f);
}

std::string dump_config(const ExperimentConfig& config) {
    ExperimentConfig c = config;
    std::ostringstream os;
    os.precision(17);
    visit(c, Writer{os, {}});
    return os.str();
}

void resolve_paths(ExperimentConfig& config) {
    const char* root = std::getenv("DIVA_ROOT");
    if (!root || !*root) return;
    for (auto* p : {&config.paths.data, &config.paths.runs, &config.paths.reports})
        if (p->is_relative()) *p = std::filesystem::path(root) / *p;
}

}  // namespace diva::cli
