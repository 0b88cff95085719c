// SPDX-License-Identifier: Apache-2.0
#include "mcsc/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"

#include "mcsc/errors.hpp"
#include "mcsc/metrics.hpp"
#include "mcsc/numeric.hpp"
#include "mcsc/tasks.hpp"

namespace fs = std::filesystem;

namespace mcsc {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw ConfigError("config: invalid value '" + value + "' for key '" + key + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    bad_value(key, value);
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    if (trim(value).empty()) return out;
    for (const auto& item : split_csv(value)) out.push_back(parse_number<double>(key, trim(item)));
    return out;
}

std::string join_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
    return out;
}

struct Field {
    const char* key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

#define MCSC_FIELD(KEY, MEMBER, TYPE)                                                        \
    Field {                                                                                  \
        KEY, [](const RunConfig& c) { return to_text(c.MEMBER); },                           \
            [](RunConfig& c, const std::string& v) { c.MEMBER = parse_as<TYPE>(KEY, v); }    \
    }

std::string to_text(double x) { return format_double(x); }
std::string to_text(int x) { return std::to_string(x); }
std::string to_text(long x) { return std::to_string(x); }
std::string to_text(std::uint64_t x) { return std::to_string(x); }
std::string to_text(bool x) { return x ? "true" : "false"; }
std::string to_text(const std::string& x) { return x; }

template <typename T>
T parse_as(const std::string& key, const std::string& value) {
    if constexpr (std::is_same_v<T, bool>) {
        return parse_bool(key, value);
    } else if constexpr (std::is_same_v<T, std::string>) {
        return value;
    } else {
        return parse_number<T>(key, value);
    }
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        Field{"seed", [](const RunConfig& c) { return to_text(c.seed); },
              [](RunConfig& c, const std::string& v) {
                  c.seed = parse_as<std::uint64_t>("seed", v);
                  c.world.seed = c.seed;
              }},
        MCSC_FIELD("world.n_dims", world.n_dims, int),
        MCSC_FIELD("world.motion_quality_corr", world.motion_quality_corr, double),
        Field{"world.within_group_corr",
              [](const RunConfig& c) { return c.world.within_group_corr ? to_text(*c.world.within_group_corr) : "auto"; },
              [](RunConfig& c, const std::string& v) {
                  if (v == "auto") {
                      c.world.within_group_corr.reset();
                  } else {
                      c.world.within_group_corr = parse_as<double>("world.within_group_corr", v);
                  }
              }},
        MCSC_FIELD("world.label_noise", world.label_noise, double),
        MCSC_FIELD("world.tie_epsilon", world.tie_epsilon, double),
        Field{"world.oracle_weights", [](const RunConfig& c) { return join_list(c.world.oracle_weights); },
              [](RunConfig& c, const std::string& v) { c.world.oracle_weights = parse_list("world.oracle_weights", v); }},
        MCSC_FIELD("world.rating_levels", world.rating_levels, int),
        MCSC_FIELD("world.n_prompts", n_prompts, int),
        MCSC_FIELD("world.videos_per_prompt", videos_per_prompt, int),
        MCSC_FIELD("world.heldout_fraction", heldout_fraction, double),
        MCSC_FIELD("policy.n_buckets", shape.n_buckets, int),
        MCSC_FIELD("policy.max_length", shape.max_length, int),
        MCSC_FIELD("policy.n_fillers", shape.n_fillers, int),
        MCSC_FIELD("policy.format_prior", format_prior, double),
        MCSC_FIELD("grpo.group_size", grpo.group_size, int),
        MCSC_FIELD("grpo.clip", grpo.clip, double),
        MCSC_FIELD("grpo.kl_coef", grpo.kl_coef, double),
        MCSC_FIELD("grpo.batch_size", grpo.batch_size, int),
        MCSC_FIELD("grpo.updates_per_batch", grpo.updates_per_batch, int),
        Field{"grpo.optimizer", [](const RunConfig& c) { return to_string(c.grpo.optimizer.kind); },
              [](RunConfig& c, const std::string& v) { c.grpo.optimizer.kind = optimizer_kind_from_string(v); }},
        MCSC_FIELD("grpo.lr", grpo.optimizer.learning_rate, double),
        MCSC_FIELD("grpo.weight_decay", grpo.optimizer.weight_decay, double),
        MCSC_FIELD("grpo.decay_steps", grpo.optimizer.decay_steps, long),
        MCSC_FIELD("scdr.steps", scdr_steps, long),
        MCSC_FIELD("hcr.steps", hcr_steps, long),
        MCSC_FIELD("hcr.eval_every", hcr_eval_every, long),
        MCSC_FIELD("hcr.target_tau", hcr_target_tau, double),
        Field{"align.mode", [](const RunConfig& c) { return to_string(c.align.mode); },
              [](RunConfig& c, const std::string& v) { c.align.mode = align_mode_from_string(v); }},
        MCSC_FIELD("align.beta", align.beta, double),
        Field{"align.optimizer", [](const RunConfig& c) { return to_string(c.align.optimizer.kind); },
              [](RunConfig& c, const std::string& v) { c.align.optimizer.kind = optimizer_kind_from_string(v); }},
        MCSC_FIELD("align.lr", align.optimizer.learning_rate, double),
        MCSC_FIELD("align.weight_decay", align.optimizer.weight_decay, double),
        MCSC_FIELD("align.decay_steps", align.optimizer.decay_steps, long),
        MCSC_FIELD("align.candidates", align.candidates, int),
        MCSC_FIELD("align.batch_size", align.batch_size, int),
        MCSC_FIELD("align.steps", align.steps, int),
        MCSC_FIELD("align.eval_samples", align.eval_samples, int),
        MCSC_FIELD("align.prompts", align_prompts, int),
        MCSC_FIELD("align.eval_prompts", align_eval_prompts, int),
        MCSC_FIELD("align.embed_dim", embed_dim, int),
        MCSC_FIELD("align.generator_bias", generator_bias, double),
        MCSC_FIELD("align.generator_weight_scale", generator_weight_scale, double),
        MCSC_FIELD("align.generator_noise", generator_noise, double),
        MCSC_FIELD("align.scorer", align_scorer, std::string),
        MCSC_FIELD("align.scorer_motion_weight", scorer_motion_weight, double),
        MCSC_FIELD("stages.scdr", stage_scdr, bool),
        MCSC_FIELD("stages.hcr", stage_hcr, bool),
        MCSC_FIELD("stages.align", stage_align, bool),
    };
    return table;
}

#undef MCSC_FIELD

void sync_shape(RunConfig& c) {
    c.shape.n_dims = c.world.n_dims;
    c.shape.rating_levels = c.world.rating_levels;
}

}  // namespace

RunConfig RunConfig::from_profile(const std::string& name) {
    RunConfig c;
    c.profile = name;
    c.world.seed = c.seed;
    if (name == "desk") {
        // defaults
    } else if (name == "full") {
        c.grpo.group_size = 8;
        c.grpo.kl_coef = 0.07;
        c.grpo.batch_size = 16;
        c.grpo.optimizer = {OptimizerKind::AdamW, 1e-6};
        c.scdr_steps = 1000;
        c.hcr_steps = 1000;
        c.grpo.optimizer.decay_steps = 2 * c.grpo.updates_per_batch * c.hcr_steps;
        c.align.beta = 2500.0;
        c.align.batch_size = 8;
        c.align.candidates = 4;
        c.align.optimizer = {OptimizerKind::AdamW, 6e-6};
        c.align_prompts = 10000;
        c.align.steps = 20 * 10000 / 8;  // 20 epochs over 10k pairs
    } else {
        throw ConfigError("unknown profile '" + name + "' (expected desk or full)");
    }
    sync_shape(c);
    return c;
}

RunConfig RunConfig::from_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config: " + path.string());
    std::vector<std::pair<std::string, std::string>> items;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config " + path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        }
        items.emplace_back(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    }
    std::string profile = "desk";
    for (const auto& [k, v] : items) {
        if (k == "profile") profile = v;
    }
    auto c = from_profile(profile);
    for (const auto& [k, v] : items) {
        if (k != "profile") c.set(k, v);
    }
    return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "profile") throw ConfigError("config: profile can only be chosen when loading");
    for (const auto& f : fields()) {
        if (key == f.key) {
            f.set(*this, value);
            sync_shape(*this);
            return;
        }
    }
    throw ConfigError("config: unknown key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    std::vector<std::pair<std::string, std::string>> out{{"profile", profile}};
    for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
    return out;
}

std::string RunConfig::dump() const {
    std::string out;
    for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
    return out;
}

std::string RunConfig::hash() const {
    const auto h = hash_tag(dump());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void RunConfig::validate() const {
    world.validate();
    shape.validate();
    grpo.validate();
    align.validate();
    if (n_prompts < 2) throw ConfigError("config: world.n_prompts must be at least 2");
    if (videos_per_prompt < 2) throw ConfigError("config: world.videos_per_prompt must be at least 2");
    if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) throw ConfigError("config: world.heldout_fraction must lie in (0, 1)");
    if (!(format_prior >= 0.0)) throw ConfigError("config: policy.format_prior must be non-negative");
    if (scdr_steps < 0 || hcr_steps < 0) throw ConfigError("config: step counts must be non-negative");
    if (hcr_eval_every < 1) throw ConfigError("config: hcr.eval_every must be positive");
    if (align_prompts < 1 || align_eval_prompts < 1) throw ConfigError("config: align prompt counts must be positive");
    if (embed_dim < 1) throw ConfigError("config: align.embed_dim must be positive");
    if (!(generator_noise >= 0.0)) throw ConfigError("config: align.generator_noise must be non-negative");
    if (align_scorer != "oracle" && align_scorer != "static" && align_scorer != "rm") {
        throw ConfigError("config: align.scorer must be oracle, static or rm");
    }
    if (shape.n_dims != world.n_dims || shape.rating_levels != world.rating_levels) {
        throw ConfigError("config: policy shape does not match world");
    }
}

fs::path resolve_out_root(const std::string& explicit_out) {
    if (!explicit_out.empty()) return explicit_out;
    if (const char* env = std::getenv("MCSC_OUT"); env != nullptr && *env != '\0') return env;
    return "runs";
}

namespace {

fs::path ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
    std::ofstream out(path, std::ios::out | mode);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

void require_file(const fs::path& path, const std::string& what) {
    if (!fs::exists(path)) throw IoError("missing " + what + ": " + path.string());
}

WorldConfig seeded_world(const RunConfig& c) {
    WorldConfig w = c.world;
    w.seed = c.seed;
    return w;
}

struct Dataset {
    std::vector<SyntheticVideo> corpus;
    CorpusSplit split;
    std::vector<DimInstance> train_instances;
    std::vector<DimInstance> heldout_instances;
};

Dataset load_dataset(const RunConfig& config, const fs::path& out) {
    Dataset d;
    d.corpus = load_world(out);
    d.split = split_by_prompt(d.corpus, config.heldout_fraction);
    std::set<std::uint64_t> held;
    for (const auto& v : d.split.heldout) held.insert(v.prompt_id);
    // labels come from the full-corpus stream so they match instances.csv
    for (auto& inst : factorize(d.corpus, seeded_world(config))) {
        (held.count(inst.video.prompt_id) ? d.heldout_instances : d.train_instances).push_back(std::move(inst));
    }
    return d;
}

std::uint64_t stage_seed(const RunConfig& c, const char* stage) { return derive_seed(c.seed, stage); }

nlohmann::ordered_json optional_json(const std::optional<double>& x) {
    return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::vector<SyntheticVideo> load_world(const fs::path& out) {
    const auto path = out / "world" / "corpus.csv";
    require_file(path, "corpus (run gen-world first)");
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return read_corpus(in);
}

std::string cmd_gen_world(const RunConfig& config, const fs::path& out) {
    config.validate();
    const auto world = seeded_world(config);
    const auto corpus = generate_corpus(world, config.n_prompts, config.videos_per_prompt);
    const auto instances = factorize(corpus, world);
    const auto dir = ensure_dir(out / "world");
    {
        auto f = open_out(dir / "corpus.csv");
        write_corpus(f, corpus, world.n_dims);
    }
    {
        auto f = open_out(dir / "instances.csv");
        write_instances(f, instances);
    }
    const auto corr = correlation_matrix(corpus);
    nlohmann::ordered_json s;
    s["command"] = "gen-world";
    s["videos"] = corpus.size();
    s["instances"] = instances.size();
    s["motion_static_corr"] = optional_json(corr.motion_static_mean());
    s["config_hash"] = config.hash();
    write_text(dir / "summary.json", s.dump(2) + "\n");
    write_text(dir / "config.txt", config.dump());
    return s.dump();
}

std::string cmd_train_scdr(const RunConfig& config, const fs::path& out, const ScdrOptions& options) {
    config.validate();
    const auto data = load_dataset(config, out);
    const auto dir = ensure_dir(out / (options.answer_only ? "scdr_answer_only" : "scdr"));
    const auto reference = PolicyParams::with_format_prior(config.shape, config.format_prior);

    PolicyCheckpoint ckpt{reference, {}, config.hash()};
    if (options.resume) {
        require_file(*options.resume, "checkpoint");
        ckpt = load_checkpoint(options.resume->string());
        if (!(ckpt.policy.shape() == config.shape)) throw ConfigError("checkpoint shape does not match configuration");
        ckpt.config_hash = config.hash();
    }
    const bool lenient = options.answer_only;
    const double initial_acc = scdr_accuracy(ckpt.policy, data.heldout_instances, lenient);

    const auto inputs = scdr_inputs(data.train_instances);
    auto metrics = open_out(dir / "metrics.jsonl", options.resume ? std::ios::app : std::ios::trunc);
    GrpoRun run;
    run.dataset = &inputs;
    run.reference = &reference;
    run.reward = scdr_reward_fn(config.shape.limits(), options.answer_only);
    run.seed = stage_seed(config, options.answer_only ? "scdr_answer_only" : "scdr");
    run.on_step = [&](const GrpoMetrics& m, const PolicyParams&) {
        metrics << to_jsonl(m) << '\n';
        return true;
    };
    const long steps = options.steps.value_or(config.scdr_steps);
    run_grpo(ckpt.policy, ckpt.optimizer, config.grpo, run, steps);
    metrics.flush();
    if (!metrics) throw IoError("failed writing " + (dir / "metrics.jsonl").string());
    save_checkpoint((dir / "checkpoint.json").string(), ckpt);

    nlohmann::ordered_json s;
    s["command"] = "train-scdr";
    s["answer_only"] = options.answer_only;
    s["steps"] = steps;
    s["total_updates"] = ckpt.optimizer.step;
    s["heldout_instances"] = data.heldout_instances.size();
    s["initial_accuracy"] = initial_acc;
    s["final_accuracy"] = scdr_accuracy(ckpt.policy, data.heldout_instances, lenient);
    s["config_hash"] = config.hash();
    write_text(dir / "summary.json", s.dump(2) + "\n");
    return s.dump();
}

std::string cmd_train_hcr(const RunConfig& config, const fs::path& out, const HcrOptions& options) {
    config.validate();
    const auto data = load_dataset(config, out);
    const auto world = seeded_world(config);
    PolicyParams policy = PolicyParams::with_format_prior(config.shape, config.format_prior);
    if (!options.from_scratch) {
        const auto path = options.scdr_checkpoint.value_or(out / "scdr" / "checkpoint.json");
        require_file(path, "ScDR checkpoint (pass --from-scratch to train without it)");
        policy = load_checkpoint(path.string()).policy;
        if (!(policy.shape() == config.shape)) throw ConfigError("checkpoint shape does not match configuration");
    }
    const PolicyParams reference = policy;
    const auto dir = ensure_dir(out / (options.from_scratch ? "hcr_scratch" : "hcr"));
    const auto train_pairs = hcr_pairs(data.split.train, world);
    const auto eval_pairs = hcr_pairs(data.split.heldout, world);

    auto metrics = open_out(dir / "metrics.jsonl");
    HcrTrainOptions o;
    o.steps = config.hcr_steps;
    o.eval_every = config.hcr_eval_every;
    o.target_tau = config.hcr_target_tau;
    o.seed = stage_seed(config, "hcr");
    o.on_step = [&](const GrpoMetrics& m) { metrics << to_jsonl(m) << '\n'; };
    OptimizerState state;
    const auto result = train_hcr(policy, state, reference, config.grpo, train_pairs, eval_pairs, o);
    metrics.flush();
    if (!metrics) throw IoError("failed writing " + (dir / "metrics.jsonl").string());

    auto evals = open_out(dir / "eval.jsonl");
    for (const auto& p : result.curve) {
        nlohmann::ordered_json j;
        j["step"] = p.step;
        j["tau"] = p.accuracy.tau;
        j["diff"] = optional_json(p.accuracy.diff);
        j["malformed"] = p.accuracy.malformed;
        evals << j.dump() << '\n';
    }
    save_checkpoint((dir / "checkpoint.json").string(), {policy, state, config.hash()});

    const auto& last = result.curve.back().accuracy;
    nlohmann::ordered_json s;
    s["command"] = "train-hcr";
    s["warm_start"] = !options.from_scratch;
    s["steps"] = config.hcr_steps;
    s["heldout_pairs"] = eval_pairs.size();
    s["initial_tau"] = result.curve.front().accuracy.tau;
    s["final_tau"] = last.tau;
    s["final_diff"] = optional_json(last.diff);
    s["target_tau"] = config.hcr_target_tau;
    s["steps_to_target"] = result.steps_to_target ? nlohmann::ordered_json(*result.steps_to_target) : nullptr;
    s["config_hash"] = config.hash();
    write_text(dir / "summary.json", s.dump(2) + "\n");
    return s.dump();
}

GeneratorParams initial_generator(const RunConfig& config) {
    return GeneratorParams::initial(config.world.n_dims, config.embed_dim, config.generator_bias,
                                    config.generator_weight_scale, config.generator_noise,
                                    stage_seed(config, "generator"));
}

std::vector<Prompt> align_train_prompts(const RunConfig& config) {
    return make_prompts(config.align_prompts, config.embed_dim, stage_seed(config, "align_prompts"), 0);
}

std::vector<Prompt> align_eval_prompts(const RunConfig& config) {
    // disjoint id range from the training prompts
    return make_prompts(config.align_eval_prompts, config.embed_dim, stage_seed(config, "align_prompts"),
                        static_cast<std::uint64_t>(config.align_prompts));
}

std::string cmd_align(const RunConfig& config, const fs::path& out, const AlignOptions& options) {
    config.validate();
    const auto world = seeded_world(config);
    const std::string scorer_kind = options.scorer.value_or(config.align_scorer);
    std::unique_ptr<VideoScorer> scorer;
    if (scorer_kind == "oracle") {
        scorer = std::make_unique<FeatureScorer>(FeatureScorer::oracle(world));
    } else if (scorer_kind == "static") {
        scorer = std::make_unique<FeatureScorer>(FeatureScorer::static_dominated(world, config.scorer_motion_weight));
    } else if (scorer_kind == "rm") {
        const auto path = options.rm_checkpoint.value_or(out / "hcr" / "checkpoint.json");
        require_file(path, "reward-model checkpoint");
        auto policy = load_checkpoint(path.string()).policy;
        if (policy.shape().n_dims != world.n_dims) throw ConfigError("reward model does not match world dimensions");
        scorer = std::make_unique<PolicyScorer>(std::move(policy));
    } else {
        throw ConfigError("unknown scorer '" + scorer_kind + "' (expected oracle, static or rm)");
    }

    std::vector<AlignMode> modes;
    if (options.compare) {
        modes = {AlignMode::Sft, AlignMode::Dpo, AlignMode::McDpo};
    } else {
        modes = {options.mode ? align_mode_from_string(*options.mode) : config.align.mode};
    }

    const auto initial = initial_generator(config);
    const auto train_prompts = align_train_prompts(config);
    const auto eval_prompts = align_eval_prompts(config);
    AlignConfig ac = config.align;
    ac.seed = stage_seed(config, "align");

    const auto root = ensure_dir(out / "align");
    nlohmann::ordered_json report;
    report["command"] = "align";
    report["scorer"] = scorer_kind;
    report["config_hash"] = config.hash();
    nlohmann::ordered_json by_mode = nlohmann::ordered_json::object();
    for (const auto mode : modes) {
        ac.mode = mode;
        const auto dir = ensure_dir(root / to_string(mode));
        auto metrics = open_out(dir / "metrics.jsonl");
        const auto result = align_run(initial, train_prompts, eval_prompts, *scorer, world, ac,
                                      [&](const AlignMetrics& m) { metrics << to_jsonl(m) << '\n'; });
        metrics.flush();
        if (!metrics) throw IoError("failed writing " + (dir / "metrics.jsonl").string());
        {
            auto f = open_out(dir / "pairs.csv");
            write_pairs(f, result.pairs);
        }
        save_generator((dir / "generator.json").string(), result.model);
        by_mode[to_string(mode)] = {{"pairs", result.pairs.size()},
                                    {"initial_dynamic_degree", result.initial_dynamic_degree},
                                    {"final_dynamic_degree", result.final_dynamic_degree},
                                    {"initial_overall_score", result.initial_overall_score},
                                    {"final_overall_score", result.final_overall_score}};
    }
    report["modes"] = by_mode;
    write_text(root / "report.json", report.dump(2) + "\n");
    return report.dump();
}

std::string cmd_eval(const RunConfig& config, const fs::path& out) {
    config.validate();
    const auto world = seeded_world(config);

    std::vector<fs::path> required{out / "world" / "corpus.csv"};
    if (config.stage_scdr) required.push_back(out / "scdr" / "checkpoint.json");
    if (config.stage_hcr) required.push_back(out / "hcr" / "checkpoint.json");
    if (config.stage_align) required.push_back(out / "align" / "report.json");
    std::string missing;
    for (const auto& p : required) {
        if (!fs::exists(p)) missing += (missing.empty() ? "" : ", ") + p.string();
    }
    if (!missing.empty()) throw IoError("missing artifacts: " + missing);

    const auto data = load_dataset(config, out);
    const auto eval_pairs = hcr_pairs(data.split.heldout, world);
    const auto dir = ensure_dir(out / "eval");

    nlohmann::ordered_json report;
    report["command"] = "eval";
    report["config_hash"] = config.hash();

    const auto corr = correlation_matrix(data.corpus);
    nlohmann::ordered_json cm = nlohmann::ordered_json::array();
    for (int i = 0; i < corr.n; ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (int j = 0; j < corr.n; ++j) row.push_back(optional_json(corr.at(i, j)));
        cm.push_back(row);
    }
    report["world"] = {{"videos", data.corpus.size()},
                       {"motion_static_corr", optional_json(corr.motion_static_mean())},
                       {"correlation", cm}};

    {
        std::vector<PrefRecord> records;
        for (const auto& p : eval_pairs) records.push_back({p.truth, p.truth});
        report["oracle_tau"] = preference_accuracy(records, PrefMode::Tau);
    }

    auto curves = [&](const fs::path& jsonl, const fs::path& csv, const std::vector<std::string>& cols) {
        std::ifstream in(jsonl);
        if (!in) throw IoError("cannot read " + jsonl.string());
        const auto summary = summarize_run(in);
        auto f = open_out(csv);
        write_curves(f, summary, cols);
        return summary;
    };
    const std::vector<std::string> grpo_cols{"mean_reward", "loss", "kl", "grad_norm"};

    if (config.stage_scdr) {
        const auto ckpt = load_checkpoint((out / "scdr" / "checkpoint.json").string());
        const auto s = curves(out / "scdr" / "metrics.jsonl", dir / "scdr_curve.csv", grpo_cols);
        report["scdr"] = {{"dim_accuracy", scdr_accuracy(ckpt.policy, data.heldout_instances)},
                          {"steps", s.records},
                          {"final_mean_reward", s.fields.count("mean_reward") ? s.fields.at("mean_reward").last : 0.0}};
    }
    if (config.stage_hcr) {
        const auto ckpt = load_checkpoint((out / "hcr" / "checkpoint.json").string());
        const auto acc = hcr_accuracy(ckpt.policy, eval_pairs);
        const auto s = curves(out / "hcr" / "metrics.jsonl", dir / "hcr_curve.csv", grpo_cols);
        curves(out / "hcr" / "eval.jsonl", dir / "hcr_eval.csv", {"tau", "diff", "malformed"});
        report["hcr"] = {{"tau", acc.tau},
                         {"diff", optional_json(acc.diff)},
                         {"malformed", acc.malformed},
                         {"dim_accuracy", scdr_accuracy(ckpt.policy, data.heldout_instances)},
                         {"steps", s.records}};
    }
    if (config.stage_align) {
        nlohmann::ordered_json modes = nlohmann::ordered_json::object();
        for (const auto mode : {AlignMode::Sft, AlignMode::Dpo, AlignMode::McDpo}) {
            const auto name = to_string(mode);
            const auto jsonl = out / "align" / name / "metrics.jsonl";
            if (!fs::exists(jsonl)) continue;
            const auto s = curves(jsonl, dir / ("align_" + name + ".csv"),
                                  {"loss", "w_w_mean", "dynamic_degree", "overall_score_mean"});
            const auto& dd = s.fields.at("dynamic_degree");
            const auto& sc = s.fields.at("overall_score_mean");
            modes[name] = {{"steps", s.records},
                           {"initial_dynamic_degree", dd.first},
                           {"final_dynamic_degree", dd.last},
                           {"initial_overall_score", sc.first},
                           {"final_overall_score", sc.last},
                           {"malformed_lines", s.malformed.size()}};
        }
        report["align"] = modes;
    }
    const auto text = report.dump(2) + "\n";
    write_text(dir / "report.json", text);
    return report.dump();
}

}  // namespace mcsc
