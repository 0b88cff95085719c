// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

namespace mcsc {

enum class OptimizerKind { AdamW, Sgd };

OptimizerKind optimizer_kind_from_string(const std::string& name);
std::string to_string(OptimizerKind kind);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::AdamW;
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  ///< decoupled; AdamW only
    /// Linear decay to zero over this many steps; 0 keeps the rate constant.
    long decay_steps = 0;

    double rate_at(long step) const;
};

struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;

    bool operator==(const OptimizerState&) const = default;
};

/// Descends along `grad`. Throws TrainingError, leaving params and state
/// untouched, if the gradient or the resulting parameters are non-finite.
void apply_update(std::span<double> params, std::span<const double> grad, const OptimizerConfig& config,
                  OptimizerState& state);

}  // namespace mcsc
