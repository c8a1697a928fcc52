// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include "diva/trainer.hpp"

namespace diva::trainer {

using lm::FrozenLm;
using resampler::ConcatOrder;

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::pair<E, const char*> (&table)[N], const char* what) {
    for (const auto& [value, name] : table)
        if (s == name) return value;
    throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

template <typename E, std::size_t N>
std::string enum_name(E e, const std::pair<E, const char*> (&table)[N]) {
    for (const auto& [value, name] : table)
        if (value == e) return name;
    return "?";
}

constexpr std::pair<Method, const char*> kMethods[] = {
    {Method::Direct, "direct"},
    {Method::Adapter, "adapter"},
    {Method::FixedResampler, "fixed_resampler"},
    {Method::Diva, "diva"},
    {Method::DivaAblation, "diva_ablation"},
};
constexpr std::pair<Modality, const char*> kModalities[] = {
    {Modality::Text, "text"},
    {Modality::Vision, "vision"},
    {Modality::VPlusT, "v_plus_t"},
    {Modality::TPlusV, "t_plus_v"},
};
constexpr std::pair<Source, const char*> kSources[] = {
    {Source::Vision, "vision"},
    {Source::Text, "text"},
};

}  // namespace

std::string method_name(Method m) { return enum_name(m, kMethods); }
std::string modality_name(Modality m) { return enum_name(m, kModalities); }
std::string source_name(Source s) { return enum_name(s, kSources); }
Method parse_method(const std::string& s) { return parse_enum(s, kMethods, "method"); }
Modality parse_modality(const std::string& s) { return parse_enum(s, kModalities, "modality"); }
Source parse_source(const std::string& s) { return parse_enum(s, kSources, "source"); }

void TrainConfig::validate() const {
    const std::string where = "train config (" + method_name(method) + ", " +
                              modality_name(modality) + "): ";
    switch (method) {
        case Method::Direct:
        case Method::Adapter:
            if (method == Method::Adapter && modality == Modality::TPlusV)
                throw ConfigError(where + "adapter runs use vision-first concatenation");
            break;
        case Method::FixedResampler:
            if (modality != Modality::VPlusT)
                throw ConfigError(where + "fixed_resampler consumes both modalities (v_plus_t)");
            if (k_queries == 0) throw ConfigError(where + "k_queries must be positive");
            break;
        case Method::Diva:
            if (modality != Modality::VPlusT)
                throw ConfigError(where + "diva requires both modalities (v_plus_t)");
            if (query_source != Source::Vision || context_source != Source::Text || !gates_enabled)
                throw ConfigError(where + "role swaps and gate removal belong to diva_ablation");
            break;
        case Method::DivaAblation:
            if (modality != Modality::VPlusT)
                throw ConfigError(where + "diva_ablation draws sources from v_plus_t inputs");
            break;
    }
    if (method == Method::Adapter && adapter_hidden == 0)
        throw ConfigError(where + "adapter_hidden must be positive");
    if (batch == 0) throw ConfigError(where + "batch must be positive");
    if (!(lr > 0.0)) throw ConfigError(where + "lr must be positive");
    if (max_grad_norm < 0.0) throw ConfigError(where + "max_grad_norm must be >= 0");
    if (method == Method::Diva || method == Method::DivaAblation ||
        method == Method::FixedResampler)
        diva_config(n_heads * 2).validate();
}

resampler::DivaConfig TrainConfig::diva_config(std::size_t d) const {
    resampler::DivaConfig c;
    c.d = d;
    c.n_layers = n_layers;
    c.n_heads = n_heads;
    c.ffn_mult = ffn_mult;
    c.g0 = g0;
    c.init_std = init_std;
    c.gated = gates_enabled;
    return c;
}

std::string config_echo(const TrainConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "method=" << method_name(c.method) << '\n'
       << "modality=" << modality_name(c.modality) << '\n'
       << "query_source=" << source_name(c.query_source) << '\n'
       << "context_source=" << source_name(c.context_source) << '\n'
       << "gates_enabled=" << (c.gates_enabled ? "true" : "false") << '\n'
       << "g0=" << c.g0 << '\n'
       << "n_layers=" << c.n_layers << '\n'
       << "n_heads=" << c.n_heads << '\n'
       << "ffn_mult=" << c.ffn_mult << '\n'
       << "init_std=" << c.init_std << '\n'
       << "k_queries=" << c.k_queries << '\n'
       << "adapter_hidden=" << c.adapter_hidden << '\n'
       << "lr=" << c.lr << '\n'
       << "batch=" << c.batch << '\n'
       << "steps=" << c.steps << '\n'
       << "max_grad_norm=" << c.max_grad_norm << '\n'
       << "checkpoint_every=" << c.checkpoint_every << '\n'
       << "seed=" << c.seed << '\n';
    return os.str();
}

TrainConfig parse_config_echo(const std::string& text) {
    TrainConfig c;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
        try {
            if (k == "method") c.method = parse_method(v);
            else if (k == "modality") c.modality = parse_modality(v);
            else if (k == "query_source") c.query_source = parse_source(v);
            else if (k == "context_source") c.context_source = parse_source(v);
            else if (k == "gates_enabled") c.gates_enabled = v == "true";
            else if (k == "g0") c.g0 = std::stod(v);
            else if (k == "n_layers") c.n_layers = std::stoull(v);
            else if (k == "n_heads") c.n_heads = std::stoull(v);
            else if (k == "ffn_mult") c.ffn_mult = std::stoull(v);
            else if (k == "init_std") c.init_std = std::stod(v);
            else if (k == "k_queries") c.k_queries = std::stoull(v);
            else if (k == "adapter_hidden") c.adapter_hidden = std::stoull(v);
            else if (k == "lr") c.lr = std::stod(v);
            else if (k == "batch") c.batch = std::stoull(v);
            else if (k == "steps") c.steps = std::stoull(v);
            else if (k == "max_grad_norm") c.max_grad_norm = std::stod(v);
            else if (k == "checkpoint_every") c.checkpoint_every = std::stoull(v);
            else if (k == "seed") c.seed = std::stoull(v);
        } catch (const std::logic_error& e) {
            throw ConfigError("config echo: bad value for " + k + ": " + v);
        }
    }
    return c;
}

ParameterSet FusionParams::parameters() const {
    if (adapter) return adapter->parameters();
    if (fixed) return fixed->parameters();
    if (diva) return diva->parameters();
    return {};
}

FusionParams FusionParams::clone() const {
    FusionParams out;
    if (adapter) out.adapter = adapter->clone();
    if (fixed) out.fixed = fixed->clone();
    if (diva) out.diva = diva->clone();
    return out;
}

FusionParams init_fusion(const TrainConfig& config, std::size_t d) {
    config.validate();
    FusionParams p;
    switch (config.method) {
        case Method::Direct: break;
        case Method::Adapter:
            p.adapter = resampler::init_adapter(d, config.adapter_hidden, config.seed, config.init_std);
            break;
        case Method::FixedResampler:
            p.fixed = resampler::init_fixed_resampler(config.diva_config(d), config.k_queries,
                                                      config.seed);
            break;
        case Method::Diva:
        case Method::DivaAblation:
            p.diva = resampler::init_diva(config.diva_config(d), config.seed);
            break;
    }
    return p;
}

Prepared prepare(const task::TaskInstance& instance, const FrozenLm& lm,
                 const Modalities& modalities) {
    Prepared p;
    p.instance = &instance;
    p.text_tokens = task::serialize_text(instance.table);
    p.text = lm::embed_tokens(p.text_tokens, lm);
    p.vision = modalities.encoder.encode(instance.table, modalities.corruption, instance.vision_seed)
                   .features;
    if (p.vision.cols() != lm.config().d)
        throw DimensionError("prepare: vision features have width " +
                             std::to_string(p.vision.cols()) + ", LM expects " +
                             std::to_string(lm.config().d));
    return p;
}

std::vector<Prepared> prepare_all(std::span<const task::TaskInstance> instances,
                                  const FrozenLm& lm, const Modalities& modalities) {
    std::vector<Prepared> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) out.push_back(prepare(inst, lm, modalities));
    return out;
}

namespace {

// Raw inputs for a modality. In the joint orders the second block's token
// positions continue after the first block, as the LM would see them.
Tensor modality_input(const Prepared& p, Modality modality, const FrozenLm& lm) {
    switch (modality) {
        case Modality::Text: return p.text;
        case Modality::Vision: return p.vision;
        case Modality::VPlusT:
            return resampler::direct_concat(p.vision,
                                            lm::embed_tokens(p.text_tokens, lm, p.vision.rows()),
                                            ConcatOrder::VisionFirst);
        case Modality::TPlusV:
            return resampler::direct_concat(p.vision, p.text, ConcatOrder::TextFirst);
    }
    return {};
}

const Tensor& pick(const Prepared& p, Source s) { return s == Source::Vision ? p.vision : p.text; }

}  // namespace

Tensor build_context(const Prepared& p, const TrainConfig& config, const FusionParams& params,
                     const FrozenLm& lm) {
    switch (config.method) {
        case Method::Direct: return modality_input(p, config.modality, lm);
        case Method::Adapter:
            if (!params.adapter) throw ConfigError("build_context: adapter parameters missing");
            return resampler::adapter_forward(modality_input(p, config.modality, lm), *params.adapter);
        case Method::FixedResampler:
            if (!params.fixed) throw ConfigError("build_context: fixed resampler parameters missing");
            return resampler::fixed_resampler_forward(modality_input(p, config.modality, lm),
                                                      *params.fixed);
        case Method::Diva:
        case Method::DivaAblation:
            if (!params.diva) throw ConfigError("build_context: diva parameters missing");
            return resampler::diva_forward(pick(p, config.context_source),
                                           pick(p, config.query_source), *params.diva)
                .vectors;
    }
    return {};
}

Tensor sft_loss(const task::TaskInstance& instance, const Tensor& prefix, const FrozenLm& lm) {
    return lm::prefix_target_loss(prefix, instance.prompt, instance.target, lm.weights());
}

std::vector<lm::LmExample> lm_examples(std::span<const task::TaskInstance> instances,
                                       const Modalities& modalities, bool text, bool vision) {
    std::vector<lm::LmExample> out;
    for (const auto& inst : instances) {
        if (text) {
            lm::LmExample ex;
            ex.context = task::serialize_text(inst.table);
            ex.prompt = inst.prompt;
            ex.target = inst.target;
            out.push_back(std::move(ex));
        }
        if (vision) {
            lm::LmExample ex;
            ex.soft_prefix =
                modalities.encoder.encode(inst.table, modalities.corruption, inst.vision_seed).features;
            ex.prompt = inst.prompt;
            ex.target = inst.target;
            out.push_back(std::move(ex));
        }
    }
    return out;
}

}  // namespace diva::trainer
