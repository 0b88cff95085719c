// SPDX-License-Identifier: Apache-2.0
#include "mcsc/policy.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "mcsc/errors.hpp"
#include "mcsc/numeric.hpp"

namespace mcsc {

int PolicyShape::bucket(double feature) const {
    const int b = static_cast<int>(std::floor(std::clamp(feature, 0.0, 1.0) * n_buckets));
    return std::min(b, n_buckets - 1);
}

int PolicyShape::verdict_row(int motion_diff, int static_diff) const {
    return 1 + (motion_diff + motion_range()) * (2 * static_range() + 1) + (static_diff + static_range());
}

void PolicyShape::validate() const {
    if (n_dims < kMotionDims + 1) throw ConfigError("policy shape: n_dims must be at least 3");
    if (rating_levels < 2) throw ConfigError("policy shape: rating_levels must be at least 2");
    if (n_buckets < 1) throw ConfigError("policy shape: n_buckets must be positive");
    if (max_length < 1) throw ConfigError("policy shape: max_length must be positive");
    if (n_fillers < 0) throw ConfigError("policy shape: n_fillers must be non-negative");
}

PolicyParams::PolicyParams(PolicyShape shape) : shape_(shape) {
    shape_.validate();
    logits_.assign(shape_.parameter_count(), 0.0);
}

std::span<const double> PolicyParams::kind_row(int row) const {
    const auto n = static_cast<std::size_t>(shape_.n_kinds());
    return std::span<const double>(logits_).subspan(shape_.kind_offset() + static_cast<std::size_t>(row) * n, n);
}

std::span<const double> PolicyParams::value_row(int row) const {
    const auto n = static_cast<std::size_t>(shape_.rating_levels);
    return std::span<const double>(logits_).subspan(shape_.value_offset() + static_cast<std::size_t>(row) * n, n);
}

std::span<const double> PolicyParams::verdict_row(int row) const {
    return std::span<const double>(logits_).subspan(shape_.verdict_offset() + static_cast<std::size_t>(row) * 3, 3);
}

namespace {

std::vector<int> template_kinds(const PolicyShape& s, Task task) {
    std::vector<int> t;
    if (task == Task::Scdr) {
        t = {PolicyShape::kOpenThink, s.kind_evid(),  PolicyShape::kCloseThink,
             PolicyShape::kOpenAnswer, s.kind_rate(), PolicyShape::kCloseAnswer};
    } else {
        for (int d = 0; d < s.n_dims; ++d) {
            t.insert(t.end(), {PolicyShape::kOpenDim, s.kind_dim(d), s.kind_evid(), s.kind_rate(), PolicyShape::kCloseDim});
        }
        t.push_back(s.kind_prefer());
    }
    return t;
}

}  // namespace

PolicyParams PolicyParams::with_format_prior(PolicyShape shape, double strength) {
    PolicyParams p(shape);
    const auto n = static_cast<std::size_t>(shape.n_kinds());
    for (Task task : {Task::Scdr, Task::Hcr}) {
        const auto tmpl = template_kinds(shape, task);
        for (int pos = 0; pos < shape.max_length; ++pos) {
            const int kind = pos < static_cast<int>(tmpl.size()) ? tmpl[static_cast<std::size_t>(pos)] : shape.kind_stop();
            const auto row = static_cast<std::size_t>(shape.kind_row(task, pos));
            p.logits_[shape.kind_offset() + row * n + static_cast<std::size_t>(kind)] = strength;
        }
    }
    return p;
}

namespace {

struct SegmentState {
    Task task = Task::Scdr;
    std::span<const double> features;
    int fixed_dim = -1;    // single-dim queries: the queried dim
    int current_dim = -1;  // pairs: dim of the open block
};

struct Decoder {
    const PolicyParams& policy;
    const PolicyShape& shape;
    Decoding mode;
    Rng* rng;
    std::vector<double> probs;

    int choose(std::span<const double> logits) {
        if (mode == Decoding::Greedy) {
            return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        }
        probs.assign(logits.begin(), logits.end());
        softmax_inplace(probs);
        const double u = rng->uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        // u landed in the rounding gap above the cumulative sum
        for (std::size_t i = probs.size(); i-- > 0;) {
            if (probs[i] > 0.0) return static_cast<int>(i);
        }
        return 0;
    }
};

double log_softmax_at(std::span<const double> logits, int index) {
    double max = logits[0];
    for (double v : logits) max = std::max(max, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - max);
    return logits[static_cast<std::size_t>(index)] - max - std::log(sum);
}

}  // namespace

double step_logprob(const PolicyParams& policy, const Step& step) {
    const auto& s = policy.shape();
    double lp = log_softmax_at(policy.kind_row(step.kind_row), step.kind);
    if (step.kind == s.kind_evid()) {
        lp += log_softmax_at(policy.value_row(step.evid_row), step.value - 1);
    } else if (step.kind == s.kind_rate()) {
        lp += log_softmax_at(policy.value_row(step.rate_row), step.value - 1);
    } else if (step.kind == s.kind_prefer()) {
        lp += log_softmax_at(policy.verdict_row(step.verdict_row), step.value);
    }
    return lp;
}

Rollout decode(const PolicyParams& policy, const TaskInput& input, Decoding mode, Rng* rng) {
    const auto& shape = policy.shape();
    if (mode == Decoding::Sample && rng == nullptr) throw InputError("decode: sampling requires an rng");
    Decoder dec{policy, shape, mode, rng, {}};

    const bool pair = std::holds_alternative<HcrQuery>(input);
    std::array<std::span<const double>, 2> videos;
    int fixed_dim = -1;
    if (pair) {
        const auto& q = std::get<HcrQuery>(input);
        videos = {q.features_a, q.features_b};
    } else {
        const auto& q = std::get<ScdrQuery>(input);
        videos = {q.features, {}};
        fixed_dim = q.dim;
        if (fixed_dim < 0 || fixed_dim >= shape.n_dims) throw InputError("decode: query dim out of range");
    }
    for (int v = 0; v < (pair ? 2 : 1); ++v) {
        if (static_cast<int>(videos[static_cast<std::size_t>(v)].size()) != shape.n_dims) {
            throw InputError("decode: feature vector does not match policy dimensions");
        }
    }

    Rollout out;
    // last RATE emitted per (segment, dim); 0 = none
    std::array<std::vector<int>, 2> ratings{std::vector<int>(static_cast<std::size_t>(shape.n_dims), 0),
                                            std::vector<int>(static_cast<std::size_t>(shape.n_dims), 0)};
    const int n_segments = pair ? 2 : 1;
    for (int seg = 0; seg < n_segments; ++seg) {
        SegmentState st;
        st.task = pair ? Task::Hcr : Task::Scdr;
        st.features = videos[static_cast<std::size_t>(seg)];
        st.fixed_dim = fixed_dim;
        TokenSeq tokens;
        for (int pos = 0; pos < shape.max_length; ++pos) {
            Step step;
            step.kind_row = shape.kind_row(st.task, pos);
            const int dim = st.fixed_dim >= 0 ? st.fixed_dim : st.current_dim;
            const int dim_ctx = dim >= 0 ? dim : shape.n_dims;
            const int bucket = dim >= 0 ? shape.bucket(st.features[static_cast<std::size_t>(dim)]) : 0;
            step.evid_row = shape.value_row(0, dim_ctx, bucket);
            step.rate_row = shape.value_row(1, dim_ctx, bucket);
            if (pair && seg == 1) {
                int dm = 0;
                int ds = 0;
                for (int d = 0; d < shape.n_dims; ++d) {
                    const int ra = ratings[0][static_cast<std::size_t>(d)];
                    const int rb = ratings[1][static_cast<std::size_t>(d)];
                    if (ra == 0 || rb == 0) continue;
                    (is_motion_dim(d) ? dm : ds) += ra - rb;
                }
                step.verdict_row = shape.verdict_row(dm, ds);
            } else {
                step.verdict_row = 0;
            }

            step.kind = dec.choose(policy.kind_row(step.kind_row));
            if (step.kind == shape.kind_evid()) {
                step.value = dec.choose(policy.value_row(step.evid_row)) + 1;
            } else if (step.kind == shape.kind_rate()) {
                step.value = dec.choose(policy.value_row(step.rate_row)) + 1;
            } else if (step.kind == shape.kind_prefer()) {
                step.value = dec.choose(policy.verdict_row(step.verdict_row));
            }
            step.old_logprob = step_logprob(policy, step);
            out.steps.push_back(step);

            if (step.kind == shape.kind_stop()) break;
            Token tok;
            if (step.kind < 6) {
                tok.kind = static_cast<TokenKind>(step.kind);
            } else if (step.kind < shape.kind_evid()) {
                tok = Token::dim(step.kind - 6);
                st.current_dim = tok.value;
            } else if (step.kind == shape.kind_evid()) {
                tok = Token::evid(step.value);
            } else if (step.kind == shape.kind_rate()) {
                tok = Token::rate(step.value);
                if (pair && st.current_dim >= 0) {
                    ratings[static_cast<std::size_t>(seg)][static_cast<std::size_t>(st.current_dim)] = step.value;
                }
            } else if (step.kind == shape.kind_prefer()) {
                tok = Token::prefer(static_cast<Verdict>(step.value));
            } else {
                tok = Token::filler(step.kind - shape.kind_filler(0));
            }
            tokens.push_back(tok);
        }
        out.segments.push_back(std::move(tokens));
    }
    return out;
}

RolloutGroup sample_group(const PolicyParams& policy, const TaskInput& input, int group_size, Rng& rng) {
    if (group_size < 2) throw InputError("sample_group: group size must be at least 2");
    RolloutGroup group{input, {}};
    group.responses.reserve(static_cast<std::size_t>(group_size));
    for (int i = 0; i < group_size; ++i) group.responses.push_back(decode(policy, input, Decoding::Sample, &rng));
    return group;
}

}  // namespace mcsc
