// SPDX-License-Identifier: Apache-2.0
//
// Synthetic video world: a latent per-dimension quality space with a
// configurable negative coupling between motion and static dimensions, plus a
// ground-truth preference oracle standing in for human annotators.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcsc/rng.hpp"

namespace mcsc {

inline constexpr int kObjectMotion = 0;
inline constexpr int kCameraMotion = 1;
inline constexpr int kVisualQuality = 2;
inline constexpr int kSemanticAlignment = 3;
inline constexpr int kTemporalConsistency = 4;
inline constexpr int kDefaultDims = 5;
inline constexpr int kMotionDims = 2;

/// Name of dimension `d`; the first five are named, later ones are `dim_<d>`.
std::string dimension_name(int d);
/// Object and camera motion (indices 0 and 1) are the motion-related dims.
constexpr bool is_motion_dim(int d) { return d == kObjectMotion || d == kCameraMotion; }

enum class Verdict { A, B, Tie };

std::string_view verdict_name(Verdict v);
Verdict swap_verdict(Verdict v);

struct SyntheticVideo {
    std::uint64_t video_id = 0;
    std::uint64_t prompt_id = 0;
    std::vector<double> features;  ///< latent quality per dimension, each in [0, 1]

    bool operator==(const SyntheticVideo&) const = default;
};

struct WorldConfig {
    int n_dims = kDefaultDims;
    /// Gaussian correlation between every motion dim and every static dim.
    double motion_quality_corr = -0.6;
    /// Correlation among dims of the same group (motion/motion, static/static).
    /// Unset means |motion_quality_corr|, the smallest value keeping the
    /// one-factor covariance positive semi-definite.
    std::optional<double> within_group_corr;
    double label_noise = 0.02;
    double tie_epsilon = 0.002;
    /// Empty means the default: 0.25 per motion dim, the rest split evenly.
    std::vector<double> oracle_weights;
    int rating_levels = 5;
    std::uint64_t seed = 1234;

    /// Throws ConfigError on any violated invariant, including a latent
    /// correlation matrix that is not positive semi-definite.
    void validate() const;
    std::vector<double> weights() const;
    /// Row-major n_dims x n_dims latent correlation matrix.
    std::vector<double> latent_correlation() const;
    /// Lower Cholesky factor of the latent correlation (row-major).
    std::vector<double> latent_cholesky() const;
};

std::vector<double> default_oracle_weights(int n_dims);

struct DimInstance {
    SyntheticVideo video;
    int dim = 0;
    int label = 1;  ///< ordinal rating in 1..rating_levels
};

/// Standard normal CDF, the monotone squashing used to map latents into [0, 1].
double normal_cdf(double x);

std::vector<SyntheticVideo> generate_corpus(const WorldConfig& config, int n_prompts, int videos_per_prompt);

/// Noise-free rating of a single feature value: equal-width bins over [0, 1].
int quantize_rating(double feature, int rating_levels);

int oracle_dim_score(const SyntheticVideo& video, int dim, const WorldConfig& config, Rng& rng);

double oracle_utility(const SyntheticVideo& video, const WorldConfig& config);
double utility(std::span<const double> features, std::span<const double> weights);

Verdict oracle_preference(const SyntheticVideo& a, const SyntheticVideo& b, const WorldConfig& config);

/// One instance per (video, dim), video-major, labels drawn with a stream
/// derived from config.seed.
std::vector<DimInstance> factorize(const std::vector<SyntheticVideo>& corpus, const WorldConfig& config);

/// Pearson correlation of features across a corpus. Entries involving a
/// zero-variance dimension are std::nullopt.
struct CorrelationMatrix {
    int n = 0;
    std::vector<std::optional<double>> values;

    const std::optional<double>& at(int i, int j) const { return values[static_cast<std::size_t>(i * n + j)]; }
    /// Mean of the motion x static block; nullopt if any entry is undefined.
    std::optional<double> motion_static_mean() const;
};

CorrelationMatrix correlation_matrix(const std::vector<SyntheticVideo>& corpus);

/// Fixed pseudo-random embedding attached to an opaque prompt id.
std::vector<double> prompt_embedding(std::uint64_t prompt_id, int dim, std::uint64_t seed);

// Corpus persistence: header `video_id,prompt_id,<dim names...>`, one video per line.
void write_corpus(std::ostream& out, const std::vector<SyntheticVideo>& corpus, int n_dims);
std::vector<SyntheticVideo> read_corpus(std::istream& in);

// Factorized instances: header `video_id,dim,label`.
void write_instances(std::ostream& out, const std::vector<DimInstance>& instances);

}  // namespace mcsc
