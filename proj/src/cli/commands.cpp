// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "diva/checkpoint.hpp"
#include "diva/cli.hpp"

namespace diva::cli {

namespace fs = std::filesystem;
using trainer::Method;
using trainer::Modality;
using trainer::Source;
using trainer::TrainConfig;

namespace {

void note(const std::string& msg) { std::cerr << "[diva] " << msg << std::endl; }
void warn(const std::string& msg) { std::cerr << "[diva] warning: " << msg << std::endl; }

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + p.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& body) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f || !(f << body)) throw std::runtime_error("cannot write " + p.string());
}

const char* const kSplits[] = {"pretrain", "heldout", "train", "eval"};

std::size_t split_count(const DataConfig& d, const std::string& split) {
    if (split == "pretrain") return d.pretrain_per_kind;
    if (split == "heldout") return d.heldout_per_kind;
    if (split == "train") return d.train_per_kind;
    return d.eval_per_kind;
}

fs::path dataset_path(const ExperimentConfig& c, task::TaskKind kind, const std::string& split) {
    return c.paths.data / (task::kind_name(kind) + "_" + split + ".jsonl");
}

std::vector<task::TaskInstance> load_split(const ExperimentConfig& c, const std::string& split,
                                           const std::vector<task::TaskKind>& kinds) {
    std::vector<task::TaskInstance> out;
    for (auto k : kinds) {
        const fs::path p = dataset_path(c, k, split);
        if (!fs::exists(p)) throw ConfigError("missing dataset " + p.string() + " (run gen-data)");
        auto part = task::read_dataset(p);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

trainer::Modalities modalities(const ExperimentConfig& c) {
    return {task::VisionEncoder(c.lm.model.d, c.encoder_seed), c.corruption};
}

fs::path lm_dir(const ExperimentConfig& c) { return c.paths.runs / "lm"; }

lm::FrozenLm load_lm(const ExperimentConfig& c) {
    const fs::path ckpt = lm_dir(c) / "lm.ckpt";
    if (!fs::exists(ckpt)) throw ConfigError("missing " + ckpt.string() + " (run pretrain-lm)");
    lm::FrozenLm frozen(lm::LmWeights::from_parameters(c.lm.model, load_checkpoint(ckpt)));
    const std::string expected = read_file(lm_dir(c) / "lm.hash");
    if (hash_hex(frozen.hash()) + "\n" != expected)
        throw ConfigError("LM checkpoint does not match " + (lm_dir(c) / "lm.hash").string());
    return frozen;
}

std::string kinds_line(const std::vector<task::TaskKind>& kinds) {
    std::string s = "kinds=";
    for (std::size_t i = 0; i < kinds.size(); ++i) s += (i ? "," : "") + task::kind_name(kinds[i]);
    return s + "\n";
}

std::vector<task::TaskKind> parse_kinds_line(const std::string& text,
                                             const std::vector<task::TaskKind>& fallback) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("kinds=", 0) != 0) continue;
        std::vector<task::TaskKind> out;
        std::istringstream items(line.substr(6));
        std::string k;
        while (std::getline(items, k, ','))
            if (!k.empty()) out.push_back(task::parse_kind(k));
        return out;
    }
    return fallback;
}

std::string fmt(double v) { return eval::format_number(v); }

}  // namespace

// ---------------------------------------------------------------------------

void cmd_gen_data(const ExperimentConfig& c, bool dump_human) {
    const lm::Vocab& vocab = lm::Vocab::standard();
    fs::create_directories(c.paths.data);
    vocab.save(c.paths.data / "vocab.txt");
    for (auto kind : c.data.kinds) {
        for (const std::string split : kSplits) {
            task::DatasetSpec spec{c.data.seed, kind, split, split_count(c.data, split), c.bounds};
            const auto instances = task::generate_dataset(spec);
            task::write_dataset(dataset_path(c, kind, split), instances);
            if (dump_human) {
                std::ostringstream os;
                for (const auto& inst : instances) {
                    os << inst.id << '\n' << task::render_table(inst.table) << "prompt:";
                    for (const auto& t : vocab.decode(inst.prompt)) os << ' ' << t;
                    os << "\ntarget:";
                    for (const auto& t : vocab.decode(inst.target)) os << ' ' << t;
                    os << "\n\n";
                }
                auto txt = dataset_path(c, kind, split);
                txt.replace_extension(".txt");
                write_file(txt, os.str());
            }
            note("wrote " + std::to_string(instances.size()) + " " + task::kind_name(kind) + "/" +
                 split + " instances");
        }
    }
}

void cmd_pretrain_lm(const ExperimentConfig& c) {
    const auto mod = modalities(c);
    const auto pre = load_split(c, "pretrain", c.data.kinds);
    const auto held = load_split(c, "heldout", c.data.kinds);
    const auto corpus = trainer::lm_examples(pre, mod, c.lm.text, c.lm.vision);
    const auto heldout = trainer::lm_examples(held, mod, c.lm.text, c.lm.vision);
    note("pretraining LM on " + std::to_string(corpus.size()) + " examples for " +
         std::to_string(c.lm.train.steps) + " steps");

    lm::PretrainLog log;
    const auto frozen = lm::pretrain_lm(corpus, heldout, c.lm.model, c.lm.train, &log,
                                        [](std::size_t step, double loss) {
                                            note("lm step " + std::to_string(step) + " loss " + fmt(loss));
                                        });
    const fs::path dir = lm_dir(c);
    fs::create_directories(dir);
    save_checkpoint(dir / "lm.ckpt", frozen.parameters());
    write_file(dir / "lm.hash", hash_hex(frozen.hash()) + "\n");
    std::ostringstream curve;
    curve << "step,loss\n";
    for (const auto& [s, l] : log.train_curve) curve << s << ',' << fmt(l) << '\n';
    write_file(dir / "loss.csv", curve.str());
    write_file(dir / "heldout.txt", "heldout_loss_start=" + fmt(log.heldout_loss_start) +
                                        "\nheldout_loss_end=" + fmt(log.heldout_loss_end) + "\n");
    lm::Vocab::standard().save(dir / "vocab.txt");
    write_file(dir / "config.ini", dump_config(c));
    note("held-out loss " + fmt(log.heldout_loss_start) + " -> " + fmt(log.heldout_loss_end));
}

std::string default_run_id(const TrainConfig& t) {
    std::ostringstream os;
    os << trainer::method_name(t.method);
    switch (t.method) {
        case Method::Direct: os << '-' << trainer::modality_name(t.modality); return os.str();
        case Method::Adapter: os << '-' << trainer::modality_name(t.modality); break;
        case Method::FixedResampler: os << "-k" << t.k_queries; break;
        case Method::DivaAblation:
            os << "-q" << trainer::source_name(t.query_source) << "-c"
               << trainer::source_name(t.context_source) << (t.gates_enabled ? "-gated" : "-ungated");
            [[fallthrough]];
        case Method::Diva: os << "-g0_" << t.g0 << "-L" << t.n_layers; break;
    }
    os << "-s" << t.seed;
    return os.str();
}

namespace {

// Config text that identifies a finished run: the echo plus the task kinds.
std::string run_identity(const TrainRequest& r, const std::vector<task::TaskKind>& kinds) {
    return trainer::config_echo(r.config) + kinds_line(kinds);
}

}  // namespace

fs::path cmd_train(const ExperimentConfig& c, const TrainRequest& request) {
    request.config.validate();
    const auto kinds = request.kinds.empty() ? c.data.kinds : request.kinds;
    const std::string id = request.run_id.empty() ? default_run_id(request.config) : request.run_id;
    const fs::path dir = c.paths.runs / id;

    const auto lm = load_lm(c);
    const auto train_set = load_split(c, "train", kinds);
    const auto prepared = trainer::prepare_all(train_set, lm, modalities(c));
    note("training " + id + " on " + std::to_string(train_set.size()) + " instances");

    trainer::TrainHooks hooks;
    hooks.on_step = [&](std::size_t step, double loss) {
        if (step % 100 == 0 || step == request.config.steps)
            note(id + " step " + std::to_string(step) + " loss " + fmt(loss));
    };
    hooks.on_checkpoint = [&](std::size_t step, const trainer::FusionParams& p) {
        save_checkpoint(dir / ("params_step" + std::to_string(step) + ".ckpt"), p.parameters());
    };
    const auto result = trainer::train_run(request.config, prepared, lm, hooks);
    for (const auto& w : result.warnings) warn(id + ": " + w);
    if (result.skipped > 0)
        warn(id + ": skipped " + std::to_string(result.skipped) + " over-length instances");
    trainer::write_run(dir, result);
    write_file(dir / "config.txt", run_identity(request, kinds));
    fs::remove(dir / "records.jsonl");
    if (result.aborted)
        throw NumericError(id + " aborted: " + result.abort_reason +
                           " (last good parameters saved)");
    return dir;
}

void cmd_eval(const ExperimentConfig& c, const std::string& run_id) {
    const fs::path dir = c.paths.runs / run_id;
    const std::string echo = read_file(dir / "config.txt");
    const TrainConfig tc = trainer::parse_config_echo(echo);
    const auto kinds = parse_kinds_line(echo, c.data.kinds);

    const auto lm = load_lm(c);
    if (read_file(dir / "lm.hash") != hash_hex(lm.hash()) + "\n")
        throw ConfigError(run_id + " was trained against a different LM; retrain it");
    eval::ModelSetup setup{&lm, tc, trainer::load_fusion(dir / "params.ckpt", tc, lm.config().d)};

    const auto eval_set = load_split(c, "eval", kinds);
    const auto prepared = trainer::prepare_all(eval_set, lm, modalities(c));
    const auto records = eval::evaluate(prepared, setup, c.jobs);
    eval::write_records(dir / "records.jsonl", records);

    const auto scores = eval::kind_scores(records);
    std::ostringstream os;
    os << "kind,score\n";
    for (const auto& [k, v] : scores) os << k << ',' << fmt(v) << '\n';
    os << "avg," << fmt(eval::average_score(scores)) << '\n';
    write_file(dir / "scores.csv", os.str());
    std::size_t overflow = 0;
    for (const auto& r : records) overflow += r.overflow;
    if (overflow) warn(run_id + ": " + std::to_string(overflow) + " instances exceeded the LM budget");
    note(run_id + " avg score " + fmt(eval::average_score(scores)));
}

TrainConfig base_train(const ExperimentConfig& c, Method m, Modality mod, std::uint64_t seed) {
    TrainConfig t = c.train;
    t.method = m;
    t.modality = mod;
    t.seed = seed;
    t.query_source = Source::Vision;
    t.context_source = Source::Text;
    t.gates_enabled = true;
    return t;
}

// Ablation grid rows map onto run configs; the full gated V/T row is the
// main DiVA run.
TrainConfig ablation_config(const ExperimentConfig& c, const std::vector<std::string>& row,
                            std::uint64_t seed) {
    const bool gated = row[0] == "on";
    const Source q = trainer::parse_source(row[1]), ctx = trainer::parse_source(row[2]);
    if (gated && q == Source::Vision && ctx == Source::Text)
        return base_train(c, Method::Diva, Modality::VPlusT, seed);
    TrainConfig t = base_train(c, Method::DivaAblation, Modality::VPlusT, seed);
    t.gates_enabled = gated;
    t.query_source = q;
    t.context_source = ctx;
    return t;
}

TrainConfig g0_config(const ExperimentConfig& c, double g0, std::uint64_t seed) {
    TrainConfig t = base_train(c, Method::Diva, Modality::VPlusT, seed);
    t.g0 = g0;
    return t;
}

TrainConfig depth_config(const ExperimentConfig& c, std::size_t depth, std::uint64_t seed) {
    TrainConfig t = base_train(c, Method::Diva, Modality::VPlusT, seed);
    t.n_layers = depth;
    return t;
}

// Trains and evaluates unless an identical finished run already exists.
std::string ensure_run(const ExperimentConfig& c, TrainRequest request) {
    const auto kinds = request.kinds.empty() ? c.data.kinds : request.kinds;
    const std::string id = request.run_id.empty() ? default_run_id(request.config) : request.run_id;
    request.run_id = id;
    const fs::path dir = c.paths.runs / id;
    const bool trained = fs::exists(dir / "config.txt") && fs::exists(dir / "params.ckpt") &&
                         fs::exists(dir / "lm.hash") &&
                         read_file(dir / "config.txt") == run_identity(request, kinds) &&
                         read_file(dir / "lm.hash") == read_file(lm_dir(c) / "lm.hash");
    if (!trained) cmd_train(c, request);
    if (!trained || !fs::exists(dir / "records.jsonl")) cmd_eval(c, id);
    return id;
}

namespace {

std::optional<std::vector<eval::PredictionRecord>> try_records(const ExperimentConfig& c,
                                                               const std::string& id) {
    const fs::path p = c.paths.runs / id / "records.jsonl";
    if (!fs::exists(p)) {
        warn("missing run " + id);
        return std::nullopt;
    }
    return eval::read_records(p);
}

std::vector<eval::PredictionRecord> of_kind(const std::vector<eval::PredictionRecord>& recs,
                                            const std::string& kind) {
    std::vector<eval::PredictionRecord> out;
    for (const auto& r : recs)
        if (kind == "all" || task::kind_name(r.kind) == kind) out.push_back(r);
    return out;
}

std::vector<std::string> kind_names(const ExperimentConfig& c) {
    std::vector<std::string> out;
    for (auto k : c.data.kinds) out.push_back(task::kind_name(k));
    return out;
}

void write_summary_tables(const ExperimentConfig& c) {
    auto collect = [&](const std::vector<std::vector<std::string>>& grid, auto make_config) {
        std::vector<eval::RunSummary> runs;
        for (const auto& labels : grid)
            for (auto seed : c.seeds) {
                const std::string id = default_run_id(make_config(labels, seed));
                const fs::path p = c.paths.runs / id / "records.jsonl";
                if (!fs::exists(p)) continue;
                runs.push_back({labels, seed, eval::kind_scores(eval::read_records(p))});
            }
        return runs;
    };
    auto emit = [&](const std::string& name, const eval::SummaryTable& t) {
        for (const auto& w : t.warnings) warn(name + ": " + w);
        write_file(c.paths.reports / name, eval::summary_csv(t));
    };

    const auto ab_grid = eval::ablation_grid();
    emit("ablation.csv",
         eval::summarize_grid({"gate", "query", "context"}, ab_grid,
                              collect(ab_grid, [&](const auto& l, auto s) { return ablation_config(c, l, s); }),
                              kind_names(c)));

    std::vector<std::vector<std::string>> g0_grid;
    for (double g : c.g0_grid) g0_grid.push_back({fmt(g)});
    emit("sweep_g0.csv",
         eval::summarize_grid({"g0"}, g0_grid,
                              collect(g0_grid, [&](const auto& l, auto s) { return g0_config(c, std::stod(l[0]), s); }),
                              kind_names(c)));

    std::vector<std::vector<std::string>> depth_grid;
    for (auto n : c.depth_grid) depth_grid.push_back({std::to_string(n)});
    emit("sweep_depth.csv",
         eval::summarize_grid({"layers"}, depth_grid,
                              collect(depth_grid, [&](const auto& l, auto s) { return depth_config(c, std::stoull(l[0]), s); }),
                              kind_names(c)));
}

}  // namespace

void cmd_analyze(const ExperimentConfig& c) {
    fs::create_directories(c.paths.reports);
    std::ostringstream comp, rec;
    comp << "seed,kind,n,text_accuracy,vision_accuracy,text_only,vision_only,both_correct,"
            "both_wrong,any_correct,one_modality_only\n";
    rec << "seed,kind,subset_size,method,recovered,total,fraction\n";

    std::vector<std::string> kinds = kind_names(c);
    kinds.push_back("all");
    bool barcode_done = false;
    for (auto seed : c.seeds) {
        const auto text = try_records(c, default_run_id(base_train(c, Method::Adapter, Modality::Text, seed)));
        const auto vision = try_records(c, default_run_id(base_train(c, Method::Adapter, Modality::Vision, seed)));
        const auto concat = try_records(c, default_run_id(base_train(c, Method::Direct, Modality::VPlusT, seed)));
        const auto diva = try_records(c, default_run_id(base_train(c, Method::Diva, Modality::VPlusT, seed)));
        if (!text || !vision) continue;
        for (const auto& kind : kinds) {
            const auto t = of_kind(*text, kind), v = of_kind(*vision, kind);
            if (t.empty()) continue;
            const auto r = eval::complementarity(t, v);
            comp << seed << ',' << kind << ',' << r.n << ',' << fmt(r.text_accuracy) << ','
                 << fmt(r.vision_accuracy) << ',' << fmt(r.text_only) << ',' << fmt(r.vision_only)
                 << ',' << fmt(r.both_correct) << ',' << fmt(r.both_wrong) << ','
                 << fmt(r.any_correct) << ',' << fmt(r.one_modality_only) << '\n';

            std::vector<std::vector<eval::PredictionRecord>> keep;
            std::vector<eval::NamedRecords> fused;
            if (concat) keep.push_back(of_kind(*concat, kind));
            if (diva) keep.push_back(of_kind(*diva, kind));
            std::size_t i = 0;
            if (concat) fused.emplace_back("direct_concat", keep[i++]);
            if (diva) fused.emplace_back("diva", keep[i++]);
            const auto rr = eval::recovery_rate(t, v, fused);
            for (const auto& m : rr.methods)
                rec << seed << ',' << kind << ',' << rr.subset_ids.size() << ',' << m.method << ','
                    << m.recovered << ',' << m.total << ',' << (m.defined ? fmt(m.fraction) : "undefined")
                    << '\n';
            if (!rr.defined) warn("seed " + std::to_string(seed) + " " + kind + ": empty both-wrong subset");

            if (!barcode_done && kind == c.analysis_kind && concat && diva) {
                const auto cc = of_kind(*concat, kind), dd = of_kind(*diva, kind);
                for (bool subset : {true, false}) {
                    const auto cols = eval::barcode_columns(t, v, cc, dd, subset);
                    const std::string stem = subset ? "barcode_subset" : "barcode_full";
                    eval::barcode_export(cols, c.paths.reports / (stem + ".svg"),
                                         c.paths.reports / (stem + ".csv"),
                                         kind + (subset ? " both-wrong subset" : " all instances") +
                                             ", seed " + std::to_string(seed));
                }
                barcode_done = true;
            }
        }
    }
    write_file(c.paths.reports / "complementarity.csv", comp.str());
    write_file(c.paths.reports / "recovery.csv", rec.str());
    write_summary_tables(c);
    note("reports written to " + c.paths.reports.string());
}

void cmd_sweep(const ExperimentConfig& c) {
    for (auto seed : c.seeds) {
        for (const auto& row : eval::ablation_grid()) ensure_run(c, {ablation_config(c, row, seed), "", {}});
        for (double g : c.g0_grid) ensure_run(c, {g0_config(c, g, seed), "", {}});
        for (auto n : c.depth_grid) ensure_run(c, {depth_config(c, n, seed), "", {}});
    }
    fs::create_directories(c.paths.reports);
    write_summary_tables(c);
}

void cmd_all(const ExperimentConfig& c) {
    cmd_gen_data(c, false);
    cmd_pretrain_lm(c);
    for (auto mod : {Modality::Text, Modality::Vision, Modality::VPlusT, Modality::TPlusV})
        ensure_run(c, {base_train(c, Method::Direct, mod, 0), "", {}});
    for (auto seed : c.seeds) {
        for (auto mod : {Modality::Text, Modality::Vision, Modality::VPlusT})
            ensure_run(c, {base_train(c, Method::Adapter, mod, seed), "", {}});
        ensure_run(c, {base_train(c, Method::FixedResampler, Modality::VPlusT, seed), "", {}});
        ensure_run(c, {base_train(c, Method::Diva, Modality::VPlusT, seed), "", {}});
    }
    cmd_analyze(c);
    cmd_sweep(c);
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
    CLI::App app{"Visual-anchor fusion lab: data, LM pretraining, fusion training and analyses"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    bool dump_human = false;
    app.add_option("--config", config_path, "Experiment config (sectioned key = value)");
    app.add_option("--seed", seed, "Use this single seed");
    app.add_option("--jobs", jobs, "Evaluation worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--dump-human", dump_human, "Also write tables as ASCII grids");

    auto* gen = app.add_subcommand("gen-data", "Generate datasets for every kind and split");
    auto* pre = app.add_subcommand("pretrain-lm", "Pretrain and freeze the backbone");
    auto* train = app.add_subcommand("train", "Train one fusion method");
    std::string method = "diva", modality = "v_plus_t", query, context, run_id, kinds;
    bool no_gates = false;
    std::optional<double> g0, lr;
    std::optional<std::size_t> layers, steps, batch;
    train->add_option("--method", method, "direct|adapter|fixed_resampler|diva|diva_ablation");
    train->add_option("--modality", modality, "text|vision|v_plus_t|t_plus_v");
    train->add_option("--query", query, "Query source for diva_ablation: vision|text");
    train->add_option("--context", context, "Context source for diva_ablation: vision|text");
    train->add_flag("--no-gates", no_gates, "Constant unit gates (diva_ablation)");
    train->add_option("--g0", g0, "Initial gate value");
    train->add_option("--layers", layers, "Resampler depth");
    train->add_option("--steps", steps, "Training steps");
    train->add_option("--lr", lr, "Learning rate");
    train->add_option("--batch", batch, "Batch size");
    train->add_option("--kinds", kinds, "Comma-separated task kinds (default: all configured)");
    train->add_option("--run-id", run_id, "Run directory name");
    auto* ev = app.add_subcommand("eval", "Evaluate a trained run on the eval split");
    std::string eval_run;
    ev->add_option("--run", eval_run, "Run id under the runs directory")->required();
    auto* an = app.add_subcommand("analyze", "Complementarity, recovery, barcodes and summaries");
    auto* sw = app.add_subcommand("sweep", "Train and score the ablation, g0 and depth grids");
    auto* all = app.add_subcommand("all", "Full pipeline");
    auto* show = app.add_subcommand("dump-config", "Print the effective configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        ExperimentConfig c = config_path.empty() ? default_config() : load_config(config_path);
        if (seed) c.seeds = {*seed};
        if (jobs) c.jobs = *jobs;
        resolve_paths(c);
        c.validate();

        if (*gen) cmd_gen_data(c, dump_human);
        else if (*pre) cmd_pretrain_lm(c);
        else if (*train) {
            TrainRequest r;
            r.config = base_train(c, trainer::parse_method(method), trainer::parse_modality(modality),
                                  c.seeds.front());
            if (!query.empty()) r.config.query_source = trainer::parse_source(query);
            if (!context.empty()) r.config.context_source = trainer::parse_source(context);
            if (no_gates) r.config.gates_enabled = false;
            if (g0) r.config.g0 = *g0;
            if (layers) r.config.n_layers = *layers;
            if (steps) r.config.steps = *steps;
            if (lr) r.config.lr = *lr;
            if (batch) r.config.batch = *batch;
            std::istringstream ks(kinds);
            for (std::string k; std::getline(ks, k, ',');)
                if (!k.empty()) r.kinds.push_back(task::parse_kind(k));
            r.run_id = run_id;
            const fs::path dir = cmd_train(c, r);
            std::cout << dir.string() << '\n';
        } else if (*ev) cmd_eval(c, eval_run);
        else if (*an) cmd_analyze(c);
        else if (*sw) cmd_sweep(c);
        else if (*all) cmd_all(c);
        else if (*show) std::cout << dump_config(c);
        return kExitOk;
    } catch (const NumericError& e) {
        std::cerr << "[diva] numeric abort: " << e.what() << std::endl;
        return kExitNumeric;
    } catch (const ConfigError& e) {
        std::cerr << "[diva] config error: " << e.what() << std::endl;
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "[diva] error: " << e.what() << std::endl;
        return kExitConfig;
    }
}

}  // namespace diva::cli
