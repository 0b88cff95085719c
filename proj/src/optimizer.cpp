// SPDX-License-Identifier: Apache-2.0
#include "mcsc/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "mcsc/errors.hpp"

namespace mcsc {

OptimizerKind optimizer_kind_from_string(const std::string& name) {
    if (name == "adamw") return OptimizerKind::AdamW;
    if (name == "sgd") return OptimizerKind::Sgd;
    throw ConfigError("unknown optimizer '" + name + "' (expected adamw or sgd)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::AdamW ? "adamw" : "sgd"; }

double OptimizerConfig::rate_at(long step) const {
    if (decay_steps <= 0) return learning_rate;
    const double frac = 1.0 - static_cast<double>(step) / static_cast<double>(decay_steps);
    return learning_rate * std::max(frac, 0.0);
}

void apply_update(std::span<double> params, std::span<const double> grad, const OptimizerConfig& config,
                  OptimizerState& state) {
    if (grad.size() != params.size()) throw InputError("apply_update: gradient size mismatch");
    for (double g : grad) {
        if (!std::isfinite(g)) throw TrainingError("non-finite gradient; step aborted");
    }
    const double lr = config.rate_at(state.step);
    const std::size_t n = params.size();
    std::vector<double> next(params.begin(), params.end());

    if (config.kind == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < n; ++i) next[i] -= lr * grad[i];
        for (double x : next) {
            if (!std::isfinite(x)) throw TrainingError("non-finite parameter update; step aborted");
        }
        std::copy(next.begin(), next.end(), params.begin());
        ++state.step;
        return;
    }

    std::vector<double> m = state.m.empty() ? std::vector<double>(n, 0.0) : state.m;
    std::vector<double> v = state.v.empty() ? std::vector<double>(n, 0.0) : state.v;
    if (m.size() != n || v.size() != n) throw InputError("apply_update: optimizer state size mismatch");
    const long t = state.step + 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        next[i] -= lr * (mhat / (std::sqrt(vhat) + config.eps) + config.weight_decay * next[i]);
        if (!std::isfinite(next[i])) throw TrainingError("non-finite parameter update; step aborted");
    }
    std::copy(next.begin(), next.end(), params.begin());
    state.m = std::move(m);
    state.v = std::move(v);
    state.step = t;
}

}  // namespace mcsc
