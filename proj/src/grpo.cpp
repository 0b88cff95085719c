// SPDX-License-Identifier: Apache-2.0
#include "mcsc/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "mcsc/errors.hpp"
#include "mcsc/numeric.hpp"

namespace mcsc {

void GrpoConfig::validate() const {
    if (group_size < 2) throw ConfigError("grpo: group_size must be at least 2");
    if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("grpo: clip must lie in (0, 1)");
    if (!(kl_coef >= 0.0)) throw ConfigError("grpo: kl_coef must be non-negative");
    if (batch_size < 1) throw ConfigError("grpo: batch_size must be positive");
    if (updates_per_batch < 1) throw ConfigError("grpo: updates_per_batch must be positive");
    if (!(optimizer.learning_rate >= 0.0)) throw ConfigError("grpo: learning rate must be non-negative");
}

std::vector<double> compute_advantages(std::span<const double> rewards) {
    if (rewards.size() < 2) throw InputError("compute_advantages: need at least two rewards");
    for (double r : rewards) {
        if (!std::isfinite(r)) throw InputError("compute_advantages: non-finite reward");
    }
    const auto n = static_cast<double>(rewards.size());
    // centred on the first reward so a constant group has exactly zero variance
    const double r0 = rewards.front();
    double offset = 0.0;
    for (double r : rewards) offset += r - r0;
    const double mean = r0 + offset / n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= n;
    const double sd = std::sqrt(var);
    std::vector<double> adv(rewards.size(), 0.0);
    if (sd == 0.0) return adv;
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
    return adv;
}

double GrpoObjective::grad_norm() const {
    double s = 0.0;
    for (double g : gradient) s += g * g;
    return std::sqrt(s);
}

namespace {

/// Probabilities and log-probabilities of one logit row.
struct Dist {
    std::vector<double> p;
    std::vector<double> logp;

    void compute(std::span<const double> logits) {
        p.assign(logits.begin(), logits.end());
        const double lse = softmax_inplace(p);
        logp.resize(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i) logp[i] = logits[i] - lse;
    }
};

double kl_divergence(const Dist& p, const Dist& q) {
    double kl = 0.0;
    for (std::size_t j = 0; j < p.p.size(); ++j) kl += p.p[j] * (p.logp[j] - q.logp[j]);
    return kl;
}

void check_step(const PolicyShape& s, const Step& step) {
    auto in = [](int v, int n) { return v >= 0 && v < n; };
    bool ok = in(step.kind_row, s.kind_rows()) && in(step.evid_row, s.value_rows()) &&
              in(step.rate_row, s.value_rows()) && in(step.verdict_row, s.verdict_rows()) &&
              in(step.kind, s.n_kinds());
    if (ok && (step.kind == s.kind_evid() || step.kind == s.kind_rate())) ok = in(step.value - 1, s.rating_levels);
    if (ok && step.kind == s.kind_prefer()) ok = in(step.value, 3);
    if (!ok) throw InputError("grpo_objective: rollout step does not match policy shape");
}

}  // namespace

GrpoObjective grpo_objective(const PolicyParams& policy, const PolicyParams& ref,
                             std::span<const RolloutGroup> groups, const GrpoConfig& config) {
    const auto& shape = policy.shape();
    if (!(ref.shape() == shape)) throw InputError("grpo_objective: policy and reference shapes differ");
    if (groups.empty()) throw InputError("grpo_objective: empty batch");

    GrpoObjective out;
    out.gradient.assign(shape.parameter_count(), 0.0);
    auto& grad = out.gradient;
    const std::size_t n_kinds = static_cast<std::size_t>(shape.n_kinds());
    const std::size_t n_levels = static_cast<std::size_t>(shape.rating_levels);
    const std::size_t value_kinds[3] = {static_cast<std::size_t>(shape.kind_evid()),
                                        static_cast<std::size_t>(shape.kind_rate()),
                                        static_cast<std::size_t>(shape.kind_prefer())};

    Dist kind_p, kind_q;
    Dist val_p[3], val_q[3];  // evid, rate, verdict

    const double group_weight = 1.0 / static_cast<double>(groups.size());
    for (const auto& group : groups) {
        const auto g_count = group.responses.size();
        if (g_count < 2) throw InputError("grpo_objective: group must hold at least two responses");
        std::vector<double> rewards;
        rewards.reserve(g_count);
        for (const auto& r : group.responses) rewards.push_back(r.reward);
        const auto adv = compute_advantages(rewards);

        for (std::size_t i = 0; i < g_count; ++i) {
            const auto& resp = group.responses[i];
            if (resp.steps.empty()) throw InputError("grpo_objective: response without actions");
            const double a = adv[i];
            const double w = group_weight / static_cast<double>(g_count) / static_cast<double>(resp.steps.size());
            for (const auto& step : resp.steps) {
                check_step(shape, step);
                kind_p.compute(policy.kind_row(step.kind_row));
                kind_q.compute(ref.kind_row(step.kind_row));
                val_p[0].compute(policy.value_row(step.evid_row));
                val_q[0].compute(ref.value_row(step.evid_row));
                val_p[1].compute(policy.value_row(step.rate_row));
                val_q[1].compute(ref.value_row(step.rate_row));
                val_p[2].compute(policy.verdict_row(step.verdict_row));
                val_q[2].compute(ref.verdict_row(step.verdict_row));

                const std::size_t offsets[3] = {
                    shape.value_offset() + static_cast<std::size_t>(step.evid_row) * n_levels,
                    shape.value_offset() + static_cast<std::size_t>(step.rate_row) * n_levels,
                    shape.verdict_offset() + static_cast<std::size_t>(step.verdict_row) * 3};
                const std::size_t kind_off = shape.kind_offset() + static_cast<std::size_t>(step.kind_row) * n_kinds;

                // which value head (if any) the sampled action used
                int head = -1;
                for (int h = 0; h < 3; ++h) {
                    if (static_cast<std::size_t>(step.kind) == value_kinds[h]) head = h;
                }
                const std::size_t value_index =
                    head == 2 ? static_cast<std::size_t>(step.value) : static_cast<std::size_t>(step.value - 1);

                double logp = kind_p.logp[static_cast<std::size_t>(step.kind)];
                if (head >= 0) logp += val_p[head].logp[value_index];
                const double ratio = std::exp(logp - step.old_logprob);
                const double clipped = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
                const double unclipped_term = ratio * a;
                const double clipped_term = clipped * a;
                out.surrogate += w * std::min(unclipped_term, clipped_term);

                if (unclipped_term <= clipped_term) {
                    // d(-w * ratio * a) = -w * a * ratio * d logp
                    const double coef = -w * a * ratio;
                    for (std::size_t j = 0; j < n_kinds; ++j) {
                        const double onehot = j == static_cast<std::size_t>(step.kind) ? 1.0 : 0.0;
                        grad[kind_off + j] += coef * (onehot - kind_p.p[j]);
                    }
                    if (head >= 0) {
                        const auto& vp = val_p[head];
                        for (std::size_t j = 0; j < vp.p.size(); ++j) {
                            const double onehot = j == value_index ? 1.0 : 0.0;
                            grad[offsets[head] + j] += coef * (onehot - vp.p[j]);
                        }
                    }
                }

                // exact KL of the full token distribution at this position:
                // KL_kind + sum_h p(kind_h) * KL_value_h
                const double kl_kind = kl_divergence(kind_p, kind_q);
                double kl_vals[3];
                double kl = kl_kind;
                for (int h = 0; h < 3; ++h) {
                    kl_vals[h] = kl_divergence(val_p[h], val_q[h]);
                    kl += kind_p.p[value_kinds[h]] * kl_vals[h];
                }
                out.kl += w * kl;

                const double kc = w * config.kl_coef;
                if (kc != 0.0) {
                    for (std::size_t j = 0; j < n_kinds; ++j) {
                        double g = kind_p.p[j] * (kind_p.logp[j] - kind_q.logp[j] - kl_kind);
                        for (int h = 0; h < 3; ++h) {
                            const double onehot = j == value_kinds[h] ? 1.0 : 0.0;
                            g += kl_vals[h] * kind_p.p[value_kinds[h]] * (onehot - kind_p.p[j]);
                        }
                        grad[kind_off + j] += kc * g;
                    }
                    for (int h = 0; h < 3; ++h) {
                        const double scale = kc * kind_p.p[value_kinds[h]];
                        const auto& vp = val_p[h];
                        const auto& vq = val_q[h];
                        for (std::size_t j = 0; j < vp.p.size(); ++j) {
                            grad[offsets[h] + j] += scale * vp.p[j] * (vp.logp[j] - vq.logp[j] - kl_vals[h]);
                        }
                    }
                }
            }
        }
    }
    // step weights sum to one, so the weighted KL sum is already a mean
    out.loss = -out.surrogate + config.kl_coef * out.kl;
    return out;
}

GrpoObjective grpo_step(PolicyParams& policy, const PolicyParams& ref, std::span<const RolloutGroup> groups,
                        const GrpoConfig& config, OptimizerState& state) {
    auto obj = grpo_objective(policy, ref, groups, config);
    if (!std::isfinite(obj.loss)) throw TrainingError("non-finite GRPO loss; step aborted");
    apply_update(policy.logits(), obj.gradient, config.optimizer, state);
    return obj;
}

std::string to_jsonl(const GrpoMetrics& m) {
    nlohmann::ordered_json j;
    j["step"] = m.step;
    j["mean_reward"] = m.mean_reward;
    j["loss"] = m.loss;
    j["kl"] = m.kl;
    j["grad_norm"] = m.grad_norm;
    return j.dump();
}

void run_grpo(PolicyParams& policy, OptimizerState& state, const GrpoConfig& config, const GrpoRun& run,
              long n_steps) {
    config.validate();
    if (run.dataset == nullptr || run.dataset->empty()) throw InputError("run_grpo: empty dataset");
    if (run.reference == nullptr) throw InputError("run_grpo: missing reference policy");
    const long first = state.step / config.updates_per_batch;
    for (long step = first; step < first + n_steps; ++step) {
        Rng rng(derive_seed(run.seed, "grpo_step", static_cast<std::uint64_t>(step)));
        std::vector<RolloutGroup> batch;
        batch.reserve(static_cast<std::size_t>(config.batch_size));
        double reward_sum = 0.0;
        std::size_t reward_count = 0;
        for (int b = 0; b < config.batch_size; ++b) {
            const auto& input = (*run.dataset)[rng.below(run.dataset->size())];
            auto group = sample_group(policy, input, config.group_size, rng);
            for (auto& resp : group.responses) {
                resp.reward = run.reward(input, resp);
                reward_sum += resp.reward;
                ++reward_count;
            }
            batch.push_back(std::move(group));
        }
        GrpoMetrics metrics;
        metrics.step = step;
        metrics.mean_reward = reward_sum / static_cast<double>(reward_count);
        for (int u = 0; u < config.updates_per_batch; ++u) {
            const auto obj = grpo_step(policy, *run.reference, batch, config, state);
            if (u == 0) {
                metrics.loss = obj.loss;
                metrics.kl = obj.kl;
                metrics.grad_norm = obj.grad_norm();
            }
        }
        if (run.on_step && !run.on_step(metrics, policy)) break;
    }
}

void save_checkpoint(const std::string& path, const PolicyCheckpoint& ckpt) {
    const auto& s = ckpt.policy.shape();
    nlohmann::ordered_json j;
    j["format"] = "mcsc-policy";
    j["version"] = 1;
    j["config_hash"] = ckpt.config_hash;
    j["shape"] = {{"n_dims", s.n_dims},
                  {"rating_levels", s.rating_levels},
                  {"n_buckets", s.n_buckets},
                  {"max_length", s.max_length},
                  {"n_fillers", s.n_fillers}};
    j["logits"] = std::vector<double>(ckpt.policy.logits().begin(), ckpt.policy.logits().end());
    j["optimizer"] = {{"step", ckpt.optimizer.step}, {"m", ckpt.optimizer.m}, {"v", ckpt.optimizer.v}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << j.dump() << '\n';
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

PolicyCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint " + path + ": " + e.what());
    }
    if (j.value("format", "") != "mcsc-policy" || j.value("version", 0) != 1) {
        throw IoError("unsupported checkpoint format: " + path);
    }
    try {
        PolicyShape s;
        const auto& js = j.at("shape");
        s.n_dims = js.at("n_dims").get<int>();
        s.rating_levels = js.at("rating_levels").get<int>();
        s.n_buckets = js.at("n_buckets").get<int>();
        s.max_length = js.at("max_length").get<int>();
        s.n_fillers = js.at("n_fillers").get<int>();
        PolicyCheckpoint ckpt{PolicyParams(s), {}, j.value("config_hash", "")};
        const auto logits = j.at("logits").get<std::vector<double>>();
        if (logits.size() != s.parameter_count()) throw IoError("checkpoint logits size mismatch: " + path);
        std::copy(logits.begin(), logits.end(), ckpt.policy.logits().begin());
        const auto& jo = j.at("optimizer");
        ckpt.optimizer.step = jo.at("step").get<long>();
        ckpt.optimizer.m = jo.at("m").get<std::vector<double>>();
        ckpt.optimizer.v = jo.at("v").get<std::vector<double>>();
        return ckpt;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint " + path + ": " + e.what());
    }
}

}  // namespace mcsc
