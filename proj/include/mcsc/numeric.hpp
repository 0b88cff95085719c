// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mcsc {

/// Logistic function, evaluated without overflow for large |x|.
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(1 + exp(x)); equals -log(sigmoid(-x)). Stable for |x| up to 1e308.
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// In-place softmax over logits; returns log-sum-exp.
double softmax_inplace(std::span<double> values);

void softmax(std::span<const double> logits, std::span<double> probs);

/// Lower Cholesky factor of a symmetric row-major n x n matrix; nullopt when
/// the matrix is not positive semi-definite (within a small tolerance).
std::optional<std::vector<double>> cholesky(const std::vector<double>& matrix, int n);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double x);

std::vector<std::string> split_csv(std::string_view line);

}  // namespace mcsc
