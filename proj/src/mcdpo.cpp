// SPDX-License-Identifier: Apache-2.0
#include "mcsc/mcdpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "json.hpp"

#include "mcsc/errors.hpp"
#include "mcsc/numeric.hpp"
#include "mcsc/rubric.hpp"

namespace mcsc {

GeneratorParams GeneratorParams::initial(int n_dims, int embed_dim, double bias_value, double weight_scale,
                                         double noise_scale, std::uint64_t seed) {
    if (n_dims < kMotionDims + 1 || embed_dim < 1) throw ConfigError("generator: invalid dimensions");
    if (!(noise_scale >= 0.0)) throw ConfigError("generator: noise_scale must be non-negative");
    GeneratorParams g;
    g.n_dims = n_dims;
    g.embed_dim = embed_dim;
    g.noise_scale = noise_scale;
    g.weight.resize(static_cast<std::size_t>(n_dims * embed_dim));
    Rng rng(derive_seed(seed, "generator_init"));
    for (auto& w : g.weight) w = weight_scale * rng.normal();
    g.bias.assign(static_cast<std::size_t>(n_dims), bias_value);
    return g;
}

std::vector<double> GeneratorParams::predict(std::span<const double> embedding) const {
    if (embedding.size() != static_cast<std::size_t>(embed_dim)) throw InputError("generator: embedding size mismatch");
    std::vector<double> out(bias);
    for (int d = 0; d < n_dims; ++d) {
        const double* row = weight.data() + static_cast<std::size_t>(d * embed_dim);
        double acc = 0.0;
        for (int e = 0; e < embed_dim; ++e) acc += row[e] * embedding[static_cast<std::size_t>(e)];
        out[static_cast<std::size_t>(d)] += acc;
    }
    return out;
}

std::vector<double> GeneratorParams::flat() const {
    std::vector<double> out(weight);
    out.insert(out.end(), bias.begin(), bias.end());
    return out;
}

void GeneratorParams::set_flat(std::span<const double> values) {
    if (values.size() != parameter_count()) throw InputError("generator: flat parameter size mismatch");
    std::copy(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(weight.size()), weight.begin());
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(weight.size()), values.end(), bias.begin());
}

std::vector<Prompt> make_prompts(int count, int embed_dim, std::uint64_t seed, std::uint64_t first_id) {
    std::vector<Prompt> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        const std::uint64_t id = first_id + static_cast<std::uint64_t>(i);
        out.push_back({id, prompt_embedding(id, embed_dim, seed)});
    }
    return out;
}

SyntheticVideo sample_video(const GeneratorParams& model, const Prompt& prompt, const std::vector<double>& world_chol,
                            std::uint64_t video_id, Rng& rng) {
    const int n = model.n_dims;
    if (world_chol.size() != static_cast<std::size_t>(n * n)) throw InputError("sample_video: Cholesky size mismatch");
    auto f = model.predict(prompt.embedding);
    std::vector<double> z(static_cast<std::size_t>(n));
    for (auto& x : z) x = rng.normal();
    for (int i = 0; i < n; ++i) {
        double noise = 0.0;
        for (int j = 0; j <= i; ++j) noise += world_chol[static_cast<std::size_t>(i * n + j)] * z[static_cast<std::size_t>(j)];
        auto& fi = f[static_cast<std::size_t>(i)];
        fi = std::clamp(fi + model.noise_scale * noise, 0.0, 1.0);
    }
    return {video_id, prompt.prompt_id, std::move(f)};
}

FeatureScorer::FeatureScorer(WorldConfig world, std::vector<double> overall_weights, std::uint64_t seed,
                             bool flatten_motion)
    : world_(std::move(world)), weights_(std::move(overall_weights)), seed_(seed), flatten_motion_(flatten_motion) {
    world_.validate();
    if (weights_.size() != static_cast<std::size_t>(world_.n_dims)) throw ConfigError("scorer: weight count mismatch");
}

FeatureScorer FeatureScorer::oracle(const WorldConfig& world) {
    return FeatureScorer(world, world.weights(), world.seed);
}

FeatureScorer FeatureScorer::static_dominated(const WorldConfig& world, double motion_weight) {
    const int n_static = world.n_dims - kMotionDims;
    if (!(motion_weight >= 0.0 && motion_weight * kMotionDims < 1.0)) {
        throw ConfigError("scorer: motion weight must lie in [0, 1/2)");
    }
    std::vector<double> w(static_cast<std::size_t>(world.n_dims));
    for (int d = 0; d < world.n_dims; ++d) {
        w[static_cast<std::size_t>(d)] =
            is_motion_dim(d) ? motion_weight : (1.0 - kMotionDims * motion_weight) / n_static;
    }
    return FeatureScorer(world, std::move(w), world.seed);
}

RmScores FeatureScorer::score(const SyntheticVideo& video) const {
    if (video.features.size() != weights_.size()) throw InputError("scorer: feature count mismatch");
    RmScores s;
    s.overall = utility(video.features, weights_);
    Rng rng(derive_seed(seed_, "rm_dim_scores", video.video_id));
    s.dims.resize(weights_.size());
    for (int d = 0; d < world_.n_dims; ++d) {
        const int rating = oracle_dim_score(video, d, world_, rng);
        s.dims[static_cast<std::size_t>(d)] = static_cast<double>(rating) / world_.rating_levels;
    }
    if (flatten_motion_) {
        for (int d = 0; d < kMotionDims; ++d) s.dims[static_cast<std::size_t>(d)] = 0.5;
    }
    return s;
}

RmScores PolicyScorer::score(const SyntheticVideo& video) const {
    const auto& shape = policy_.shape();
    if (video.features.size() != static_cast<std::size_t>(shape.n_dims)) throw InputError("scorer: feature count mismatch");
    RmScores s;
    s.dims.resize(static_cast<std::size_t>(shape.n_dims));
    double total = 0.0;
    for (int d = 0; d < shape.n_dims; ++d) {
        const auto r = decode(policy_, ScdrQuery{video.features, d, 0}, Decoding::Greedy, nullptr);
        const auto parsed = parse_scdr(r.segments.front(), shape.limits());
        // malformed output earns the lowest score
        double v = 0.0;
        if (const auto* p = std::get_if<ParsedScdr>(&parsed)) v = static_cast<double>(p->answer) / shape.rating_levels;
        s.dims[static_cast<std::size_t>(d)] = v;
        total += v;
    }
    s.overall = total / shape.n_dims;
    return s;
}

std::optional<Verdict> PolicyScorer::prefer(const SyntheticVideo& a, const SyntheticVideo& b) const {
    const auto r = decode(policy_, HcrQuery{a.features, b.features, Verdict::Tie}, Decoding::Greedy, nullptr);
    const auto parsed = parse_hcr(r.segments.back(), policy_.shape().limits());
    if (const auto* p = std::get_if<ParsedHcr>(&parsed)) return p->final_verdict;
    return std::nullopt;
}

std::vector<RmScores> score_videos(const VideoScorer& scorer, const std::vector<SyntheticVideo>& videos) {
    std::vector<RmScores> out;
    out.reserve(videos.size());
    for (const auto& v : videos) out.push_back(scorer.score(v));
    return out;
}

std::optional<PreferencePair> construct_pairs(std::uint64_t prompt_id, const std::vector<SyntheticVideo>& candidates,
                                              const std::vector<RmScores>& scores) {
    if (candidates.size() < 2) throw InputError("construct_pairs: need at least two candidates");
    if (scores.size() != candidates.size()) throw InputError("construct_pairs: score count mismatch");
    std::size_t best = 0, worst = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i].overall > scores[best].overall) best = i;
        if (scores[i].overall < scores[worst].overall) worst = i;
    }
    if (!(scores[best].overall > scores[worst].overall)) return std::nullopt;
    return PreferencePair{prompt_id, candidates[best], candidates[worst], scores[best], scores[worst]};
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

void check_pair(const PreferencePair& pair, const GeneratorParams& model) {
    const auto n = static_cast<std::size_t>(model.n_dims);
    if (pair.winner.features.size() != n || pair.loser.features.size() != n) {
        throw InputError("preference pair: feature count does not match generator");
    }
}

/// Adds coef * d/dtheta of f(x) contracted with `df` into `grad`.
void accumulate(std::vector<double>& grad, const GeneratorParams& model, std::span<const double> embedding,
                std::span<const double> df) {
    const auto n_w = model.weight.size();
    for (int d = 0; d < model.n_dims; ++d) {
        const double g = df[static_cast<std::size_t>(d)];
        for (int e = 0; e < model.embed_dim; ++e) {
            grad[static_cast<std::size_t>(d * model.embed_dim + e)] += g * embedding[static_cast<std::size_t>(e)];
        }
        grad[n_w + static_cast<std::size_t>(d)] += g;
    }
}

void require_finite(const DpoLoss& l) {
    if (!std::isfinite(l.loss)) throw TrainingError("non-finite preference loss");
    for (double g : l.gradient) {
        if (!std::isfinite(g)) throw TrainingError("non-finite preference-loss gradient");
    }
}

}  // namespace

double dpo_reward(const GeneratorParams& model, const GeneratorParams& ref, std::span<const double> embedding,
                  const SyntheticVideo& video) {
    const auto f = model.predict(embedding);
    const auto fr = ref.predict(embedding);
    if (video.features.size() != f.size()) throw InputError("dpo_reward: feature count mismatch");
    return sq_dist(video.features, f) - sq_dist(video.features, fr);
}

MotionWeights motion_weights(double s_w_om, double s_l_om, double s_w_cm, double s_l_cm) {
    const double ww = 0.5 + sigmoid((s_w_om - s_l_om) + (s_w_cm - s_l_cm));
    return {ww, 2.0 - ww};
}

MotionWeights motion_weights(const PreferencePair& pair) {
    return motion_weights(pair.winner_scores.object_motion(), pair.loser_scores.object_motion(),
                          pair.winner_scores.camera_motion(), pair.loser_scores.camera_motion());
}

DpoLoss weighted_dpo_loss(const PreferencePair& pair, const GeneratorParams& model, const GeneratorParams& ref,
                          std::span<const double> embedding, double beta, MotionWeights weights) {
    check_pair(pair, model);
    const auto f = model.predict(embedding);
    const auto fr = ref.predict(embedding);
    const auto& ow = pair.winner.features;
    const auto& ol = pair.loser.features;
    const double r_w = sq_dist(ow, f) - sq_dist(ow, fr);
    const double r_l = sq_dist(ol, f) - sq_dist(ol, fr);
    const double z = weights.winner * r_w - weights.loser * r_l;

    DpoLoss out;
    out.weights = weights;
    out.loss = softplus(beta * z);
    const double dz = beta * sigmoid(beta * z);
    // dr/df = -2 (o - f)
    std::vector<double> df(f.size());
    for (std::size_t d = 0; d < f.size(); ++d) {
        df[d] = dz * (weights.winner * -2.0 * (ow[d] - f[d]) - weights.loser * -2.0 * (ol[d] - f[d]));
    }
    out.gradient.assign(model.parameter_count(), 0.0);
    accumulate(out.gradient, model, embedding, df);
    require_finite(out);
    return out;
}

DpoLoss dpo_loss(const PreferencePair& pair, const GeneratorParams& model, const GeneratorParams& ref,
                 std::span<const double> embedding, double beta) {
    return weighted_dpo_loss(pair, model, ref, embedding, beta, MotionWeights{1.0, 1.0});
}

DpoLoss mcdpo_loss(const PreferencePair& pair, const GeneratorParams& model, const GeneratorParams& ref,
                   std::span<const double> embedding, double beta) {
    return weighted_dpo_loss(pair, model, ref, embedding, beta, motion_weights(pair));
}

DpoLoss sft_loss(const PreferencePair& pair, const GeneratorParams& model, std::span<const double> embedding) {
    check_pair(pair, model);
    const auto f = model.predict(embedding);
    const auto& ow = pair.winner.features;
    DpoLoss out;
    out.loss = sq_dist(ow, f);
    std::vector<double> df(f.size());
    for (std::size_t d = 0; d < f.size(); ++d) df[d] = -2.0 * (ow[d] - f[d]);
    out.gradient.assign(model.parameter_count(), 0.0);
    accumulate(out.gradient, model, embedding, df);
    require_finite(out);
    return out;
}

namespace {

constexpr std::uint64_t kEvalVideoBase = std::uint64_t{1} << 40;

struct EvalStats {
    double dynamic_degree = 0.0;
    double overall = 0.0;
};

/// Draws n_samples per prompt and averages motion intensity and, when a
/// scorer is given, its overall score.
EvalStats evaluate(const GeneratorParams& model, const std::vector<Prompt>& prompts, int n_samples,
                   const std::vector<double>& chol, Rng& rng, const VideoScorer* scorer) {
    if (n_samples < 1) throw InputError("dynamic_degree: n_samples must be at least 1");
    if (prompts.empty()) throw InputError("dynamic_degree: no prompts");
    EvalStats s;
    std::uint64_t id = kEvalVideoBase;
    for (const auto& p : prompts) {
        for (int k = 0; k < n_samples; ++k) {
            const auto v = sample_video(model, p, chol, id++, rng);
            s.dynamic_degree += 0.5 * (v.features[kObjectMotion] + v.features[kCameraMotion]);
            if (scorer != nullptr) s.overall += scorer->score(v).overall;
        }
    }
    const double n = static_cast<double>(prompts.size()) * n_samples;
    s.dynamic_degree /= n;
    s.overall /= n;
    return s;
}

}  // namespace

double dynamic_degree(const GeneratorParams& model, const std::vector<Prompt>& prompts, int n_samples,
                      const std::vector<double>& world_chol, Rng& rng) {
    return evaluate(model, prompts, n_samples, world_chol, rng, nullptr).dynamic_degree;
}

AlignMode align_mode_from_string(const std::string& name) {
    if (name == "sft") return AlignMode::Sft;
    if (name == "dpo") return AlignMode::Dpo;
    if (name == "mcdpo") return AlignMode::McDpo;
    throw ConfigError("unknown align mode '" + name + "' (expected sft, dpo or mcdpo)");
}

std::string to_string(AlignMode mode) {
    switch (mode) {
        case AlignMode::Sft: return "sft";
        case AlignMode::Dpo: return "dpo";
        case AlignMode::McDpo: return "mcdpo";
    }
    return "mcdpo";
}

void AlignConfig::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("align: beta must be positive");
    if (candidates < 2) throw ConfigError("align: need at least two candidates per prompt");
    if (batch_size < 1) throw ConfigError("align: batch_size must be positive");
    if (steps < 0) throw ConfigError("align: steps must be non-negative");
    if (eval_samples < 1) throw ConfigError("align: eval_samples must be positive");
    if (!(optimizer.learning_rate >= 0.0)) throw ConfigError("align: learning rate must be non-negative");
}

std::string to_jsonl(const AlignMetrics& m) {
    nlohmann::ordered_json j;
    j["step"] = m.step;
    j["loss"] = m.loss;
    j["w_w_mean"] = m.w_w_mean;
    j["dynamic_degree"] = m.dynamic_degree;
    j["overall_score_mean"] = m.overall_score_mean;
    return j.dump();
}

AlignResult align_run(const GeneratorParams& initial, const std::vector<Prompt>& train_prompts,
                      const std::vector<Prompt>& eval_prompts, const VideoScorer& scorer, const WorldConfig& world,
                      const AlignConfig& config, const std::function<void(const AlignMetrics&)>& on_step) {
    config.validate();
    world.validate();
    if (initial.n_dims != world.n_dims) throw ConfigError("align: generator and world dimension counts differ");
    const auto chol = world.latent_cholesky();
    const GeneratorParams ref = initial;

    AlignResult result;
    result.model = initial;
    for (const auto& p : train_prompts) {
        Rng rng(derive_seed(config.seed, "align_candidates", p.prompt_id));
        std::vector<SyntheticVideo> cands;
        for (int k = 0; k < config.candidates; ++k) {
            const auto id = p.prompt_id * static_cast<std::uint64_t>(config.candidates) + static_cast<std::uint64_t>(k);
            cands.push_back(sample_video(ref, p, chol, id, rng));
        }
        if (auto pair = construct_pairs(p.prompt_id, cands, score_videos(scorer, cands))) {
            result.pairs.push_back(std::move(*pair));
            result.pair_prompts.push_back(p);
        }
    }
    if (result.pairs.empty()) throw ConfigError("align: every candidate set is degenerate; no preference pairs");

    double w_w_mean = 0.0;
    for (const auto& pair : result.pairs) {
        w_w_mean += config.mode == AlignMode::McDpo ? motion_weights(pair).winner : 1.0;
    }
    w_w_mean /= static_cast<double>(result.pairs.size());

    auto measure = [&](const GeneratorParams& model) {
        // common random numbers across steps and modes
        Rng rng(derive_seed(config.seed, "align_eval"));
        return evaluate(model, eval_prompts, config.eval_samples, chol, rng, &scorer);
    };

    auto emit = [&](long step, double loss, const EvalStats& e) {
        AlignMetrics m{step, loss, w_w_mean, e.dynamic_degree, e.overall};
        result.history.push_back(m);
        if (on_step) on_step(m);
    };

    const auto e0 = measure(result.model);
    result.initial_dynamic_degree = e0.dynamic_degree;
    result.initial_overall_score = e0.overall;
    emit(0, config.mode == AlignMode::Sft ? 0.0 : std::log(2.0), e0);

    OptimizerState state;
    const std::size_t n_params = initial.parameter_count();
    auto e_last = e0;
    for (int step = 1; step <= config.steps; ++step) {
        Rng rng(derive_seed(config.seed, "align_step", static_cast<std::uint64_t>(step)));
        std::vector<double> grad(n_params, 0.0);
        double loss = 0.0;
        for (int b = 0; b < config.batch_size; ++b) {
            const auto i = rng.below(result.pairs.size());
            const auto& pair = result.pairs[i];
            const auto& emb = result.pair_prompts[i].embedding;
            DpoLoss l;
            switch (config.mode) {
                case AlignMode::Sft: l = sft_loss(pair, result.model, emb); break;
                case AlignMode::Dpo: l = dpo_loss(pair, result.model, ref, emb, config.beta); break;
                case AlignMode::McDpo: l = mcdpo_loss(pair, result.model, ref, emb, config.beta); break;
            }
            loss += l.loss;
            for (std::size_t k = 0; k < n_params; ++k) grad[k] += l.gradient[k];
        }
        const double inv = 1.0 / config.batch_size;
        loss *= inv;
        for (auto& g : grad) g *= inv;
        auto flat = result.model.flat();
        apply_update(flat, grad, config.optimizer, state);
        result.model.set_flat(flat);
        e_last = measure(result.model);
        emit(step, loss, e_last);
    }
    result.final_dynamic_degree = e_last.dynamic_degree;
    result.final_overall_score = e_last.overall;
    return result;
}

void write_pairs(std::ostream& out, const std::vector<PreferencePair>& pairs) {
    out << "prompt_id,video_id_w,video_id_l,s_w,s_l,s_w_om,s_l_om,s_w_cm,s_l_cm\n";
    for (const auto& p : pairs) {
        out << p.prompt_id << ',' << p.winner.video_id << ',' << p.loser.video_id << ','
            << format_double(p.winner_scores.overall) << ',' << format_double(p.loser_scores.overall) << ','
            << format_double(p.winner_scores.object_motion()) << ',' << format_double(p.loser_scores.object_motion())
            << ',' << format_double(p.winner_scores.camera_motion()) << ','
            << format_double(p.loser_scores.camera_motion()) << '\n';
    }
}

void save_generator(const std::string& path, const GeneratorParams& model) {
    nlohmann::ordered_json j;
    j["format"] = "mcsc-generator";
    j["version"] = 1;
    j["n_dims"] = model.n_dims;
    j["embed_dim"] = model.embed_dim;
    j["noise_scale"] = model.noise_scale;
    j["weight"] = model.weight;
    j["bias"] = model.bias;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write generator: " + path);
    out << j.dump() << '\n';
    if (!out) throw IoError("failed writing generator: " + path);
}

GeneratorParams load_generator(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read generator: " + path);
    try {
        nlohmann::json j;
        in >> j;
        if (j.value("format", "") != "mcsc-generator" || j.value("version", 0) != 1) {
            throw IoError("unsupported generator format: " + path);
        }
        GeneratorParams g;
        g.n_dims = j.at("n_dims").get<int>();
        g.embed_dim = j.at("embed_dim").get<int>();
        g.noise_scale = j.at("noise_scale").get<double>();
        g.weight = j.at("weight").get<std::vector<double>>();
        g.bias = j.at("bias").get<std::vector<double>>();
        if (g.weight.size() != static_cast<std::size_t>(g.n_dims * g.embed_dim) ||
            g.bias.size() != static_cast<std::size_t>(g.n_dims)) {
            throw IoError("generator parameter size mismatch: " + path);
        }
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed generator " + path + ": " + e.what());
    }
}

}  // namespace mcsc
