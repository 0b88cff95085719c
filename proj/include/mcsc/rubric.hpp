// SPDX-License-Identifier: Apache-2.0
//
// Rule-based rewards for the two reward-model training stages.
#pragma once

#include <functional>
#include <optional>

#include "mcsc/response.hpp"

namespace mcsc {

struct ScdrReward {
    int format = 0;
    int accuracy = 0;
    int self_critic = 0;

    int total() const { return format + accuracy + self_critic; }
    bool operator==(const ScdrReward&) const = default;
};

struct HcrReward {
    int hier = 0;
    double dim = 0.0;
    int comparison = 0;

    double total() const { return hier + dim + comparison; }
    bool operator==(const HcrReward&) const = default;
};

/// Decides whether a parsed response's reasoning supports its answer.
using Critic = std::function<int(const ParsedScdr&)>;

int accuracy_score(const ParsedScdr& parsed, int label);

/// Rating implied by the evidence: the most frequent EVID rating, ties going
/// to the lowest rating.
int implied_rating(const std::vector<int>& evidence);

/// Default critic: 1 iff the implied rating equals the answer.
int self_critic(const ParsedScdr& parsed);

/// Format-gated sum of format, accuracy and self-critic scores. A response
/// that fails to parse scores (0, 0, 0).
ScdrReward scdr_reward(const TokenSeq& seq, int label, const FormatLimits& limits = {},
                       const Critic& critic = self_critic);

/// 1 iff the prediction equals the ground truth. A TIE ground truth is never
/// matched by an A/B prediction, and a TIE prediction never scores.
int comparison_score(Verdict predicted, Verdict truth);

/// Pair-level reward: hier = min over the two responses, dim = mean over the
/// two responses, comparison from the final prediction (nullopt scores 0).
HcrReward hcr_reward(const TokenSeq& seq_a, const TokenSeq& seq_b, std::optional<Verdict> predicted, Verdict truth,
                     const FormatLimits& limits = {});

/// Last RATE token anywhere in the sequence, ignoring structure. Used by the
/// format-free ablation.
std::optional<int> extract_answer_lenient(const TokenSeq& seq);

/// Last PREFER token anywhere in the sequence.
std::optional<Verdict> extract_verdict(const TokenSeq& seq);

}  // namespace mcsc
