// SPDX-License-Identifier: Apache-2.0
#include "mcsc/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mcsc/errors.hpp"
#include "mcsc/rubric.hpp"

namespace mcsc {

CorpusSplit split_by_prompt(const std::vector<SyntheticVideo>& corpus, double heldout_fraction) {
    if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) throw ConfigError("split: heldout fraction must lie in (0, 1)");
    std::vector<std::uint64_t> ids;
    for (const auto& v : corpus) ids.push_back(v.prompt_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < 2) throw InputError("split: need at least two prompts");
    auto n_held = static_cast<std::size_t>(std::ceil(heldout_fraction * static_cast<double>(ids.size())));
    n_held = std::clamp<std::size_t>(n_held, 1, ids.size() - 1);
    const std::uint64_t first_held = ids[ids.size() - n_held];
    CorpusSplit split;
    for (const auto& v : corpus) (v.prompt_id >= first_held ? split.heldout : split.train).push_back(v);
    return split;
}

std::vector<TaskInput> scdr_inputs(const std::vector<DimInstance>& instances) {
    std::vector<TaskInput> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) out.emplace_back(ScdrQuery{inst.video.features, inst.dim, inst.label});
    return out;
}

std::vector<HcrQuery> hcr_pairs(const std::vector<SyntheticVideo>& corpus, const WorldConfig& world) {
    std::map<std::uint64_t, std::vector<const SyntheticVideo*>> by_prompt;
    for (const auto& v : corpus) by_prompt[v.prompt_id].push_back(&v);
    std::vector<HcrQuery> out;
    for (const auto& [id, videos] : by_prompt) {
        for (std::size_t i = 0; i < videos.size(); ++i) {
            for (std::size_t j = i + 1; j < videos.size(); ++j) {
                out.push_back({videos[i]->features, videos[j]->features, oracle_preference(*videos[i], *videos[j], world)});
            }
        }
    }
    return out;
}

std::vector<TaskInput> hcr_inputs(const std::vector<HcrQuery>& pairs) {
    return {pairs.begin(), pairs.end()};
}

RewardFn scdr_reward_fn(const FormatLimits& limits, bool answer_only) {
    return [limits, answer_only](const TaskInput& input, const Rollout& r) -> double {
        const auto& q = std::get<ScdrQuery>(input);
        const auto& seq = r.segments.front();
        if (answer_only) {
            const auto a = extract_answer_lenient(seq);
            return a && *a == q.label ? 1.0 : 0.0;
        }
        return scdr_reward(seq, q.label, limits).total();
    };
}

RewardFn hcr_reward_fn(const FormatLimits& limits) {
    return [limits](const TaskInput& input, const Rollout& r) -> double {
        const auto& q = std::get<HcrQuery>(input);
        const auto& a = r.segments.at(0);
        const auto& b = r.segments.at(1);
        return hcr_reward(a, b, extract_verdict(b), q.truth, limits).total();
    };
}

std::optional<int> predict_rating(const PolicyParams& policy, const DimInstance& instance, bool lenient) {
    const auto r = decode(policy, ScdrQuery{instance.video.features, instance.dim, instance.label}, Decoding::Greedy,
                          nullptr);
    const auto& seq = r.segments.front();
    if (lenient) return extract_answer_lenient(seq);
    const auto parsed = parse_scdr(seq, policy.shape().limits());
    if (const auto* p = std::get_if<ParsedScdr>(&parsed)) return p->answer;
    return std::nullopt;
}

std::optional<Verdict> predict_verdict(const PolicyParams& policy, const HcrQuery& pair) {
    const auto r = decode(policy, pair, Decoding::Greedy, nullptr);
    const auto limits = policy.shape().limits();
    if (!parse_ok(parse_hcr(r.segments.at(0), limits))) return std::nullopt;
    const auto parsed = parse_hcr(r.segments.at(1), limits);
    if (const auto* p = std::get_if<ParsedHcr>(&parsed)) return p->final_verdict;
    return std::nullopt;
}

double scdr_accuracy(const PolicyParams& policy, const std::vector<DimInstance>& instances, bool lenient) {
    std::vector<int> preds, labels;
    preds.reserve(instances.size());
    labels.reserve(instances.size());
    for (const auto& inst : instances) {
        // 0 never matches a label in 1..K
        preds.push_back(predict_rating(policy, inst, lenient).value_or(0));
        labels.push_back(inst.label);
    }
    return dim_accuracy(preds, labels);
}

namespace {

/// A verdict guaranteed to differ from `label`; stands in for malformed output.
Verdict wrong_verdict(Verdict label) { return label == Verdict::A ? Verdict::B : Verdict::A; }

}  // namespace

PairAccuracy hcr_accuracy(const PolicyParams& policy, const std::vector<HcrQuery>& pairs) {
    std::vector<PrefRecord> records;
    records.reserve(pairs.size());
    PairAccuracy out;
    for (const auto& p : pairs) {
        const auto v = predict_verdict(policy, p);
        if (!v) ++out.malformed;
        records.push_back({v.value_or(wrong_verdict(p.truth)), p.truth});
    }
    out.tau = preference_accuracy(records, PrefMode::Tau);
    try {
        out.diff = preference_accuracy(records, PrefMode::Diff);
    } catch (const UndefinedResultError&) {
        out.diff.reset();
    }
    return out;
}

HcrTrainResult train_hcr(PolicyParams& policy, OptimizerState& state, const PolicyParams& reference,
                         const GrpoConfig& config, const std::vector<HcrQuery>& train_pairs,
                         const std::vector<HcrQuery>& eval_pairs, const HcrTrainOptions& options) {
    if (options.eval_every < 1) throw ConfigError("hcr: eval_every must be positive");
    const auto inputs = hcr_inputs(train_pairs);
    HcrTrainResult result;
    auto evaluate = [&](long step) {
        const auto acc = hcr_accuracy(policy, eval_pairs);
        result.curve.push_back({step, acc});
        if (!result.steps_to_target && acc.tau >= options.target_tau) result.steps_to_target = step;
    };
    evaluate(0);
    if (options.stop_at_target && result.steps_to_target) return result;

    GrpoRun run;
    run.dataset = &inputs;
    run.reference = &reference;
    run.reward = hcr_reward_fn(policy.shape().limits());
    run.seed = options.seed;
    long done = 0;
    run.on_step = [&](const GrpoMetrics& m, const PolicyParams&) {
        if (options.on_step) options.on_step(m);
        ++done;
        if (done % options.eval_every == 0 || done == options.steps) {
            evaluate(done);
            if (options.stop_at_target && result.steps_to_target) return false;
        }
        return true;
    };
    run_grpo(policy, state, config, run, options.steps);
    return result;
}

}  // namespace mcsc
