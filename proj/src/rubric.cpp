// SPDX-License-Identifier: Apache-2.0
#include "mcsc/rubric.hpp"

#include <algorithm>
#include <map>

namespace mcsc {

int accuracy_score(const ParsedScdr& parsed, int label) { return parsed.answer == label ? 1 : 0; }

int implied_rating(const std::vector<int>& evidence) {
    std::map<int, int> counts;
    for (int k : evidence) ++counts[k];
    int best = 0;
    int best_count = 0;
    for (const auto& [k, c] : counts) {  // ascending k, so strict > keeps the lowest on ties
        if (c > best_count) {
            best = k;
            best_count = c;
        }
    }
    return best;
}

int self_critic(const ParsedScdr& parsed) { return implied_rating(parsed.evidence) == parsed.answer ? 1 : 0; }

ScdrReward scdr_reward(const TokenSeq& seq, int label, const FormatLimits& limits, const Critic& critic) {
    const auto parsed = parse_scdr(seq, limits);
    const auto* p = std::get_if<ParsedScdr>(&parsed);
    if (!p) return {};
    return {1, accuracy_score(*p, label), critic(*p)};
}

int comparison_score(Verdict predicted, Verdict truth) {
    if (predicted == Verdict::Tie) return 0;
    return predicted == truth ? 1 : 0;
}

HcrReward hcr_reward(const TokenSeq& seq_a, const TokenSeq& seq_b, std::optional<Verdict> predicted, Verdict truth,
                     const FormatLimits& limits) {
    HcrReward r;
    r.hier = std::min(hier_format_score(seq_a, limits), hier_format_score(seq_b, limits));
    r.dim = 0.5 * (dim_format_score(seq_a, limits) + dim_format_score(seq_b, limits));
    r.comparison = predicted ? comparison_score(*predicted, truth) : 0;
    return r;
}

std::optional<int> extract_answer_lenient(const TokenSeq& seq) {
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) {
        if (it->kind == TokenKind::Rate) return it->value;
    }
    return std::nullopt;
}

std::optional<Verdict> extract_verdict(const TokenSeq& seq) {
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) {
        if (it->kind == TokenKind::Prefer) return static_cast<Verdict>(it->value);
    }
    return std::nullopt;
}

}  // namespace mcsc
