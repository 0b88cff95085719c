// SPDX-License-Identifier: Apache-2.0
//
// Reward-model training tasks: datasets, reward functions, training loops
// and greedy evaluation for the single-dimension and pairwise stages.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mcsc/grpo.hpp"
#include "mcsc/metrics.hpp"
#include "mcsc/policy.hpp"
#include "mcsc/world.hpp"

namespace mcsc {

struct CorpusSplit {
    std::vector<SyntheticVideo> train;
    std::vector<SyntheticVideo> heldout;
};

/// Holds out the last ceil(fraction * n_prompts) prompt ids, so no prompt
/// contributes to both sides.
CorpusSplit split_by_prompt(const std::vector<SyntheticVideo>& corpus, double heldout_fraction);

std::vector<TaskInput> scdr_inputs(const std::vector<DimInstance>& instances);

/// Every unordered pair of videos sharing a prompt, labeled by the oracle.
std::vector<HcrQuery> hcr_pairs(const std::vector<SyntheticVideo>& corpus, const WorldConfig& world);
std::vector<TaskInput> hcr_inputs(const std::vector<HcrQuery>& pairs);

/// Format-gated r_format + r_acc + r_sc. With `answer_only` the reward is
/// r_acc on the last RATE token, format unenforced.
RewardFn scdr_reward_fn(const FormatLimits& limits, bool answer_only = false);
/// r_hier + r_dim + r_com; the prediction is the last PREFER of the second
/// response.
RewardFn hcr_reward_fn(const FormatLimits& limits);

/// Greedy single-dimension predictions; nullopt when the output is
/// malformed (strict) or has no RATE token (lenient).
std::optional<int> predict_rating(const PolicyParams& policy, const DimInstance& instance, bool lenient = false);
/// Greedy pairwise verdict; nullopt when the second response is malformed.
std::optional<Verdict> predict_verdict(const PolicyParams& policy, const HcrQuery& pair);

/// Held-out accuracy; malformed outputs count as wrong.
double scdr_accuracy(const PolicyParams& policy, const std::vector<DimInstance>& instances, bool lenient = false);

struct PairAccuracy {
    double tau = 0.0;
    std::optional<double> diff;  ///< undefined if every label is a tie
    long malformed = 0;
};

PairAccuracy hcr_accuracy(const PolicyParams& policy, const std::vector<HcrQuery>& pairs);

struct HcrEvalPoint {
    long step = 0;
    PairAccuracy accuracy;
};

struct HcrTrainResult {
    std::vector<HcrEvalPoint> curve;
    std::optional<long> steps_to_target;  ///< first evaluated step with tau >= target
};

struct HcrTrainOptions {
    long steps = 0;
    long eval_every = 10;
    /// Stop once the target is reached; otherwise run all steps.
    bool stop_at_target = false;
    double target_tau = 0.85;
    std::uint64_t seed = 0;
    std::function<void(const GrpoMetrics&)> on_step;
};

/// GRPO on pairs with evaluation on `eval_pairs` at step 0 and every
/// eval_every steps.
HcrTrainResult train_hcr(PolicyParams& policy, OptimizerState& state, const PolicyParams& reference,
                         const GrpoConfig& config, const std::vector<HcrQuery>& train_pairs,
                         const std::vector<HcrQuery>& eval_pairs, const HcrTrainOptions& options);

}  // namespace mcsc
