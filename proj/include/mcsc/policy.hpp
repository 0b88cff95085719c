// SPDX-License-Identifier: Apache-2.0
//
// Tabular autoregressive policy for the reward model.
//
// Each emitted token is factored into a structural action ("kind") and, for
// EVID / RATE / PREFER, a value:
//
//   pi(token | state) = pi_kind(kind | task, position) * pi_value(value | row)
//
// Value rows are keyed by the state's current dimension and the bucketed
// feature of that dimension (EVID and RATE have separate rows), or, for PREFER,
// by the summed motion / static rating differences emitted so far for the two
// videos of a pair. A STOP kind ends a segment; it is an action with a
// log-probability but never appears in the emitted TokenSeq.
#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "mcsc/response.hpp"
#include "mcsc/rng.hpp"

namespace mcsc {

enum class Task { Scdr = 0, Hcr = 1 };
inline constexpr int kTaskCount = 2;

struct PolicyShape {
    int n_dims = kDefaultDims;
    int rating_levels = 5;
    int n_buckets = 10;
    int max_length = kDefaultMaxLength;
    int n_fillers = kDefaultFillers;

    bool operator==(const PolicyShape&) const = default;

    // kind vocabulary: 6 brackets, DIM_0..DIM_{D-1}, EVID*, RATE*, PREFER*, fillers, STOP
    static constexpr int kOpenThink = 0;
    static constexpr int kCloseThink = 1;
    static constexpr int kOpenAnswer = 2;
    static constexpr int kCloseAnswer = 3;
    static constexpr int kOpenDim = 4;
    static constexpr int kCloseDim = 5;
    int kind_dim(int d) const { return 6 + d; }
    int kind_evid() const { return 6 + n_dims; }
    int kind_rate() const { return 7 + n_dims; }
    int kind_prefer() const { return 8 + n_dims; }
    int kind_filler(int i) const { return 9 + n_dims + i; }
    int kind_stop() const { return 9 + n_dims + n_fillers; }
    int n_kinds() const { return 10 + n_dims + n_fillers; }

    int motion_range() const { return kMotionDims * (rating_levels - 1); }
    int static_range() const { return (n_dims - kMotionDims) * (rating_levels - 1); }

    int kind_rows() const { return kTaskCount * max_length; }
    int value_rows() const { return 2 * (n_dims + 1) * n_buckets; }
    int verdict_rows() const { return 1 + (2 * motion_range() + 1) * (2 * static_range() + 1); }

    std::size_t kind_offset() const { return 0; }
    std::size_t value_offset() const { return static_cast<std::size_t>(kind_rows() * n_kinds()); }
    std::size_t verdict_offset() const {
        return value_offset() + static_cast<std::size_t>(value_rows() * rating_levels);
    }
    std::size_t parameter_count() const { return verdict_offset() + static_cast<std::size_t>(verdict_rows() * 3); }

    int kind_row(Task task, int position) const { return static_cast<int>(task) * max_length + position; }
    /// slot 0 = EVID, 1 = RATE; dim == n_dims means "no current dimension".
    int value_row(int slot, int dim, int bucket) const { return (slot * (n_dims + 1) + dim) * n_buckets + bucket; }
    int bucket(double feature) const;
    /// Row 0 is the no-comparison context; others encode (motion diff, static diff).
    int verdict_row(int motion_diff, int static_diff) const;

    FormatLimits limits() const { return {n_dims, rating_levels, max_length, n_fillers}; }
    void validate() const;
};

class PolicyParams {
public:
    PolicyParams() : PolicyParams(PolicyShape{}) {}
    explicit PolicyParams(PolicyShape shape);

    /// Policy biased toward the task templates, standing in for a pretrained
    /// model that already follows the output format. Values stay uniform.
    static PolicyParams with_format_prior(PolicyShape shape, double strength);

    const PolicyShape& shape() const { return shape_; }
    std::span<double> logits() { return logits_; }
    std::span<const double> logits() const { return logits_; }

    std::span<const double> kind_row(int row) const;
    std::span<const double> value_row(int row) const;
    std::span<const double> verdict_row(int row) const;

    bool operator==(const PolicyParams&) const = default;

private:
    PolicyShape shape_;
    std::vector<double> logits_;
};

struct ScdrQuery {
    std::vector<double> features;
    int dim = 0;
    int label = 1;  ///< ground truth, hidden from the policy
};

struct HcrQuery {
    std::vector<double> features_a;
    std::vector<double> features_b;
    Verdict truth = Verdict::Tie;  ///< ground truth, hidden from the policy
};

using TaskInput = std::variant<ScdrQuery, HcrQuery>;

/// One sampled action together with every table row that defines the action
/// distribution at that position.
struct Step {
    int kind_row = 0;
    int evid_row = 0;
    int rate_row = 0;
    int verdict_row = 0;
    int kind = 0;
    int value = 0;  ///< rating, or verdict index; unused for unvalued kinds
    double old_logprob = 0.0;
};

struct Rollout {
    std::vector<TokenSeq> segments;  ///< one for single-dim queries, two (a, b) for pairs
    std::vector<Step> steps;         ///< |steps| = total tokens + number of STOP actions
    double reward = 0.0;
};

struct RolloutGroup {
    TaskInput input;
    std::vector<Rollout> responses;
};

enum class Decoding { Sample, Greedy };

/// Decodes one response. Sampling uses `rng`; greedy picks the lowest-index
/// argmax at every step and ignores `rng`.
Rollout decode(const PolicyParams& policy, const TaskInput& input, Decoding mode, Rng* rng);

/// G independent ancestral samples; old_logprob holds log pi at sampling time.
RolloutGroup sample_group(const PolicyParams& policy, const TaskInput& input, int group_size, Rng& rng);

/// log pi(step action) under `policy`, using the rows stored in the step.
double step_logprob(const PolicyParams& policy, const Step& step);

}  // namespace mcsc
