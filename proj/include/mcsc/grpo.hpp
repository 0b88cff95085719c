// SPDX-License-Identifier: Apache-2.0
//
// Group relative policy optimisation for the tabular reward-model policy.
#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mcsc/optimizer.hpp"
#include "mcsc/policy.hpp"

namespace mcsc {

struct GrpoConfig {
    int group_size = 8;
    double clip = 0.2;
    double kl_coef = 0.07;
    int batch_size = 16;
    /// Gradient updates per sampled batch; updates after the first see
    /// ratios away from one.
    int updates_per_batch = 2;
    OptimizerConfig optimizer{};

    void validate() const;
};

/// Group-normalised advantages (r - mean) / std with population std. All
/// zeros when std == 0. Throws InputError on fewer than two rewards or
/// non-finite rewards.
std::vector<double> compute_advantages(std::span<const double> rewards);

struct GrpoObjective {
    double loss = 0.0;       ///< -surrogate + kl_coef * kl
    double surrogate = 0.0;  ///< the clipped objective being maximised
    double kl = 0.0;         ///< mean exact KL(pi || pi_ref) over visited positions
    std::vector<double> gradient;  ///< d loss / d logits
    double grad_norm() const;
};

/// Clipped surrogate with per-token ratios against the stored sampling
/// log-probs, each response's advantage broadcast to all of its actions,
/// averaged 1/|o_i| within a response, 1/G within a group and uniformly over
/// groups, plus kl_coef times the exact categorical KL to `ref` at the same
/// positions. The gradient is analytic; clipped terms contribute none.
GrpoObjective grpo_objective(const PolicyParams& policy, const PolicyParams& ref,
                             std::span<const RolloutGroup> groups, const GrpoConfig& config);

/// Objective followed by one optimizer step on `policy`.
GrpoObjective grpo_step(PolicyParams& policy, const PolicyParams& ref, std::span<const RolloutGroup> groups,
                        const GrpoConfig& config, OptimizerState& state);

using RewardFn = std::function<double(const TaskInput&, const Rollout&)>;

struct GrpoMetrics {
    long step = 0;
    double mean_reward = 0.0;
    double loss = 0.0;
    double kl = 0.0;
    double grad_norm = 0.0;
};

std::string to_jsonl(const GrpoMetrics& m);

struct GrpoRun {
    const std::vector<TaskInput>* dataset = nullptr;
    /// Frozen KL anchor; must outlive the run.
    const PolicyParams* reference = nullptr;
    RewardFn reward;
    std::uint64_t seed = 0;
    /// Called after every step; return false to stop early.
    std::function<bool(const GrpoMetrics&, const PolicyParams&)> on_step;
};

/// Runs steps [state.step / updates_per_batch, that + n_steps). Each step
/// samples groups from the current policy for batch_size examples drawn with
/// replacement, scores them and applies updates_per_batch optimizer updates
/// with ratios taken against the sampling-time log-probs. Randomness for a step is derived from
/// (seed, step index) alone, so resuming from a checkpoint reproduces the
/// same trajectory.
void run_grpo(PolicyParams& policy, OptimizerState& state, const GrpoConfig& config, const GrpoRun& run,
              long n_steps);

/// Versioned JSON checkpoint of policy logits plus optimizer state.
struct PolicyCheckpoint {
    PolicyParams policy;
    OptimizerState optimizer;
    std::string config_hash;
};

void save_checkpoint(const std::string& path, const PolicyCheckpoint& ckpt);
PolicyCheckpoint load_checkpoint(const std::string& path);

}  // namespace mcsc
