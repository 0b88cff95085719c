// SPDX-License-Identifier: Apache-2.0
#include "mcsc/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <limits>

namespace mcsc {

double softmax_inplace(std::span<double> values) {
    double max = -std::numeric_limits<double>::infinity();
    for (double v : values) max = std::max(max, v);
    double sum = 0.0;
    for (double& v : values) {
        v = std::exp(v - max);
        sum += v;
    }
    for (double& v : values) v /= sum;
    return max + std::log(sum);
}

void softmax(std::span<const double> logits, std::span<double> probs) {
    std::copy(logits.begin(), logits.end(), probs.begin());
    softmax_inplace(probs);
}

std::optional<std::vector<double>> cholesky(const std::vector<double>& matrix, int n) {
    const auto un = static_cast<std::size_t>(n);
    std::vector<double> l(un * un, 0.0);
    constexpr double kTol = 1e-12;
    for (std::size_t i = 0; i < un; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = matrix[i * un + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * un + k] * l[j * un + k];
            if (i == j) {
                if (s < -kTol) return std::nullopt;
                l[i * un + i] = std::sqrt(std::max(s, 0.0));
            } else if (l[j * un + j] > 0.0) {
                l[i * un + j] = s / l[j * un + j];
            } else if (std::abs(s) > kTol) {
                // singular pivot with a nonzero off-diagonal remainder
                return std::nullopt;
            }
        }
    }
    return l;
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
            field.remove_suffix(1);
        }
        out.emplace_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace mcsc
