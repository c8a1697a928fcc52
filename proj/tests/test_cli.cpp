// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "diva/cli.hpp"

using namespace diva;
using namespace diva::cli;
namespace fs = std::filesystem;

namespace {

int run_args(std::vector<std::string> args) {
    args.insert(args.begin(), "diva");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run(int(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig tiny_config() {
    ExperimentConfig c = default_config();
    c.bounds.max_rows = c.bounds.max_cols = 3;
    c.data.pretrain_per_kind = 8;
    c.data.heldout_per_kind = 2;
    c.data.train_per_kind = 6;
    c.data.eval_per_kind = 4;
    c.lm.model.d = 16;
    c.lm.model.layers = 1;
    c.lm.model.heads = 2;
    c.lm.model.max_len = 96;
    c.lm.train.steps = 6;
    c.lm.train.batch = 4;
    c.lm.train.warmup = 2;
    c.lm.train.log_every = 0;
    c.train.n_heads = 2;
    c.train.adapter_hidden = 8;
    c.train.k_queries = 4;
    c.train.steps = 3;
    c.train.batch = 2;
    c.seeds = {0};
    return c;
}

// Temporary DIVA_ROOT holding a tiny config.
struct Sandbox {
    fs::path root;
    fs::path config;

    Sandbox() {
        root = fs::temp_directory_path() / "diva_cli_test";
        fs::remove_all(root);
        fs::create_directories(root);
        config = root / "tiny.ini";
        std::ofstream(config) << dump_config(tiny_config());
        setenv("DIVA_ROOT", root.c_str(), 1);
    }
    ~Sandbox() {
        unsetenv("DIVA_ROOT");
        fs::remove_all(root);
    }
    int cli(std::vector<std::string> args) const {
        args.insert(args.begin(), {"--config", config.string()});
        return run_args(args);
    }
};

}  // namespace

TEST_CASE("config text round trips") {
    const ExperimentConfig c = tiny_config();
    const std::string text = dump_config(c);
    std::istringstream in(text);
    CHECK(dump_config(parse_config(in)) == text);
    std::istringstream partial("[train]\nlr = 0.01\n");
    CHECK(parse_config(partial).train.lr == 0.01);
}

TEST_CASE("config errors") {
    std::istringstream bad_key("[train]\nlearning_rate = 1\n");
    CHECK_THROWS_AS(parse_config(bad_key), ConfigError);
    std::istringstream bad_section("[optimizer]\nlr = 1\n");
    CHECK_THROWS_AS(parse_config(bad_section), ConfigError);
    std::istringstream bad_value("[train]\nsteps = many\n");
    CHECK_THROWS_AS(parse_config(bad_value), ConfigError);
    std::istringstream bad_kind("[data]\nkinds = TSR,XYZ\n");
    CHECK_THROWS_AS(parse_config(bad_kind), ConfigError);
    ExperimentConfig c = tiny_config();
    c.seeds.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/diva.ini"), ConfigError);
}

TEST_CASE("run ids") {
    trainer::TrainConfig t;
    CHECK(default_run_id(t) == "diva-g0_0.001-L2-s0");
    t.method = trainer::Method::Adapter;
    t.modality = trainer::Modality::Vision;
    t.seed = 2;
    CHECK(default_run_id(t) == "adapter-vision-s2");
    t.method = trainer::Method::Direct;
    CHECK(default_run_id(t) == "direct-vision");
}

TEST_CASE("exit codes") {
    const Sandbox box;
    CHECK(run_args({"--help"}) == kExitOk);
    CHECK(run_args({"no-such-command"}) == kExitConfig);
    CHECK(run_args({"--config", "/nonexistent/diva.ini", "dump-config"}) == kExitConfig);
    CHECK(box.cli({"dump-config"}) == kExitOk);
    // diva needs both modalities
    CHECK(box.cli({"train", "--method", "diva", "--modality", "vision"}) == kExitConfig);
    // no LM yet
    CHECK(box.cli({"train", "--method", "adapter", "--modality", "text"}) == kExitConfig);
}

TEST_CASE("tiny pipeline") {
    const Sandbox box;
    const fs::path data = box.root / "data", runs = box.root / "runs", reports = box.root / "reports";

    REQUIRE(box.cli({"gen-data"}) == kExitOk);
    const std::string first = slurp(data / "TCR_train.jsonl");
    CHECK_FALSE(first.empty());
    REQUIRE(box.cli({"gen-data"}) == kExitOk);
    CHECK(slurp(data / "TCR_train.jsonl") == first);
    for (auto kind : task::kAllKinds) {
        const std::string k = task::kind_name(kind);
        const auto train = task::read_dataset(data / (k + "_train.jsonl"));
        const auto ev = task::read_dataset(data / (k + "_eval.jsonl"));
        CHECK(train.size() == 6);
        CHECK(ev.size() == 4);
        for (const auto& a : train)
            for (const auto& b : ev) CHECK(a.id != b.id);
    }

    REQUIRE(box.cli({"pretrain-lm"}) == kExitOk);
    const std::string hash = slurp(runs / "lm" / "lm.hash");
    REQUIRE(box.cli({"pretrain-lm"}) == kExitOk);
    CHECK(slurp(runs / "lm" / "lm.hash") == hash);

    // Analyze before any fusion run: warnings only.
    CHECK(box.cli({"analyze"}) == kExitOk);
    CHECK(fs::exists(reports / "complementarity.csv"));

    REQUIRE(box.cli({"train", "--method", "diva", "--modality", "v_plus_t"}) == kExitOk);
    const fs::path diva_dir = runs / "diva-g0_0.001-L2-s0";
    CHECK(fs::exists(diva_dir / "params.ckpt"));
    CHECK(slurp(diva_dir / "lm.hash") == hash);
    REQUIRE(box.cli({"eval", "--run", "diva-g0_0.001-L2-s0"}) == kExitOk);
    CHECK(fs::exists(diva_dir / "records.jsonl"));
    const std::string scores = slurp(diva_dir / "scores.csv");
    CHECK(scores.rfind("kind,score\n", 0) == 0);
    CHECK(scores.find("\navg,") != std::string::npos);
    CHECK(box.cli({"eval", "--run", "missing-run"}) == kExitConfig);

    for (const char* mod : {"text", "vision"}) {
        REQUIRE(box.cli({"train", "--method", "adapter", "--modality", mod}) == kExitOk);
        REQUIRE(box.cli({"eval", "--run", std::string("adapter-") + mod + "-s0"}) == kExitOk);
    }
    REQUIRE(box.cli({"train", "--method", "direct", "--modality", "v_plus_t"}) == kExitOk);
    REQUIRE(box.cli({"eval", "--run", "direct-v_plus_t"}) == kExitOk);
    REQUIRE(box.cli({"analyze"}) == kExitOk);

    const std::string comp = slurp(reports / "complementarity.csv");
    CHECK(comp.find("\n0,TCR,") != std::string::npos);
    CHECK(comp.find("\n0,all,") != std::string::npos);
    CHECK(slurp(reports / "recovery.csv").find(",diva,") != std::string::npos);
    CHECK(fs::exists(reports / "barcode_subset.csv"));
    CHECK(fs::exists(reports / "barcode_full.svg"));
    for (const char* t : {"ablation.csv", "sweep_g0.csv", "sweep_depth.csv"}) CHECK(fs::exists(reports / t));

    // A changed LM invalidates the run.
    std::ofstream(runs / "lm" / "lm.hash") << "0000000000000000\n";
    CHECK(box.cli({"eval", "--run", "diva-g0_0.001-L2-s0"}) == kExitConfig);
}
