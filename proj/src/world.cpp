// SPDX-License-Identifier: Apache-2.0
#include "mcsc/world.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mcsc/errors.hpp"
#include "mcsc/numeric.hpp"

namespace mcsc {

std::string dimension_name(int d) {
    switch (d) {
        case kObjectMotion: return "object_motion";
        case kCameraMotion: return "camera_motion";
        case kVisualQuality: return "visual_quality";
        case kSemanticAlignment: return "semantic_alignment";
        case kTemporalConsistency: return "temporal_consistency";
        default: return "dim_" + std::to_string(d);
    }
}

std::string_view verdict_name(Verdict v) {
    switch (v) {
        case Verdict::A: return "A";
        case Verdict::B: return "B";
        case Verdict::Tie: return "TIE";
    }
    return "?";
}

Verdict swap_verdict(Verdict v) {
    if (v == Verdict::A) return Verdict::B;
    if (v == Verdict::B) return Verdict::A;
    return Verdict::Tie;
}

std::vector<double> default_oracle_weights(int n_dims) {
    std::vector<double> w(static_cast<std::size_t>(n_dims), 0.0);
    const int n_static = n_dims - kMotionDims;
    for (int d = 0; d < n_dims; ++d) {
        w[static_cast<std::size_t>(d)] = is_motion_dim(d) ? 0.25 : 0.5 / n_static;
    }
    return w;
}

std::vector<double> WorldConfig::weights() const {
    return oracle_weights.empty() ? default_oracle_weights(n_dims) : oracle_weights;
}

std::vector<double> WorldConfig::latent_correlation() const {
    const double within = within_group_corr.value_or(std::abs(motion_quality_corr));
    const auto n = static_cast<std::size_t>(n_dims);
    std::vector<double> c(n * n, 0.0);
    for (int i = 0; i < n_dims; ++i) {
        for (int j = 0; j < n_dims; ++j) {
            double v;
            if (i == j) {
                v = 1.0;
            } else if (is_motion_dim(i) != is_motion_dim(j)) {
                v = motion_quality_corr;
            } else {
                v = within;
            }
            c[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] = v;
        }
    }
    return c;
}

std::vector<double> WorldConfig::latent_cholesky() const {
    auto l = cholesky(latent_correlation(), n_dims);
    if (!l) {
        throw ConfigError("latent correlation matrix is not positive semi-definite (motion_quality_corr=" +
                          std::to_string(motion_quality_corr) + ")");
    }
    return *l;
}

void WorldConfig::validate() const {
    if (n_dims < kMotionDims + 1) throw ConfigError("n_dims must be at least 3");
    if (!(motion_quality_corr > -1.0 && motion_quality_corr <= 0.0)) {
        throw ConfigError("motion_quality_corr must lie in (-1, 0]");
    }
    if (within_group_corr && !(*within_group_corr > -1.0 && *within_group_corr < 1.0)) {
        throw ConfigError("within_group_corr must lie in (-1, 1)");
    }
    if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw ConfigError("label_noise must lie in [0, 1]");
    if (!(tie_epsilon > 0.0)) throw ConfigError("tie_epsilon must be positive");
    if (rating_levels < 2) throw ConfigError("rating_levels must be at least 2");
    const auto w = weights();
    if (static_cast<int>(w.size()) != n_dims) throw ConfigError("oracle_weights must have n_dims entries");
    double sum = 0.0;
    for (double x : w) {
        if (!std::isfinite(x) || x < 0.0) throw ConfigError("oracle_weights must be finite and non-negative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("oracle_weights must sum to 1");
    if (!(w[kObjectMotion] > 0.0 && w[kCameraMotion] > 0.0)) {
        throw ConfigError("oracle_weights must be positive on motion dims");
    }
    (void)latent_cholesky();
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

std::vector<SyntheticVideo> generate_corpus(const WorldConfig& config, int n_prompts, int videos_per_prompt) {
    if (n_prompts < 1 || videos_per_prompt < 1) throw InputError("generate_corpus: counts must be >= 1");
    config.validate();
    const auto chol = config.latent_cholesky();
    const auto n = static_cast<std::size_t>(config.n_dims);
    Rng rng(derive_seed(config.seed, "corpus"));

    std::vector<SyntheticVideo> corpus;
    corpus.reserve(static_cast<std::size_t>(n_prompts) * static_cast<std::size_t>(videos_per_prompt));
    std::vector<double> z(n);
    std::uint64_t next_id = 0;
    for (int p = 0; p < n_prompts; ++p) {
        for (int k = 0; k < videos_per_prompt; ++k) {
            for (auto& v : z) v = rng.normal();
            SyntheticVideo video;
            video.video_id = next_id++;
            video.prompt_id = static_cast<std::uint64_t>(p);
            video.features.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                double latent = 0.0;
                for (std::size_t j = 0; j <= i; ++j) latent += chol[i * n + j] * z[j];
                video.features[i] = normal_cdf(latent);
            }
            corpus.push_back(std::move(video));
        }
    }
    return corpus;
}

int quantize_rating(double feature, int rating_levels) {
    const double clamped = std::clamp(feature, 0.0, 1.0);
    const int bin = static_cast<int>(std::floor(clamped * rating_levels));
    return std::min(bin, rating_levels - 1) + 1;
}

int oracle_dim_score(const SyntheticVideo& video, int dim, const WorldConfig& config, Rng& rng) {
    if (dim < 0 || dim >= static_cast<int>(video.features.size())) {
        throw InputError("oracle_dim_score: dimension out of range");
    }
    int label = quantize_rating(video.features[static_cast<std::size_t>(dim)], config.rating_levels);
    // both draws are always consumed so the stream position is label-independent
    const bool flip = rng.bernoulli(config.label_noise);
    const bool up = rng.bernoulli(0.5);
    if (flip) label = std::clamp(label + (up ? 1 : -1), 1, config.rating_levels);
    return label;
}

double utility(std::span<const double> features, std::span<const double> weights) {
    double u = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) u += weights[i] * features[i];
    return u;
}

double oracle_utility(const SyntheticVideo& video, const WorldConfig& config) {
    const auto w = config.weights();
    if (w.size() != video.features.size()) throw InputError("oracle_utility: dimension mismatch");
    return utility(video.features, w);
}

Verdict oracle_preference(const SyntheticVideo& a, const SyntheticVideo& b, const WorldConfig& config) {
    if (a.prompt_id != b.prompt_id) throw InputError("oracle_preference: videos belong to different prompts");
    const double diff = oracle_utility(a, config) - oracle_utility(b, config);
    if (std::abs(diff) < config.tie_epsilon) return Verdict::Tie;
    return diff > 0.0 ? Verdict::A : Verdict::B;
}

std::vector<DimInstance> factorize(const std::vector<SyntheticVideo>& corpus, const WorldConfig& config) {
    if (corpus.empty()) throw InputError("factorize: empty corpus");
    Rng rng(derive_seed(config.seed, "factorize"));
    std::vector<DimInstance> out;
    out.reserve(corpus.size() * static_cast<std::size_t>(config.n_dims));
    for (const auto& video : corpus) {
        for (int d = 0; d < config.n_dims; ++d) {
            out.push_back({video, d, oracle_dim_score(video, d, config, rng)});
        }
    }
    return out;
}

CorrelationMatrix correlation_matrix(const std::vector<SyntheticVideo>& corpus) {
    if (corpus.size() < 3) throw InputError("correlation_matrix: need at least 3 videos");
    const auto n = corpus.front().features.size();
    const auto count = static_cast<double>(corpus.size());
    std::vector<double> mean(n, 0.0);
    for (const auto& v : corpus) {
        if (v.features.size() != n) throw InputError("correlation_matrix: inconsistent dimensions");
        for (std::size_t i = 0; i < n; ++i) mean[i] += v.features[i];
    }
    for (auto& m : mean) m /= count;
    std::vector<double> cov(n * n, 0.0);
    for (const auto& v : corpus) {
        for (std::size_t i = 0; i < n; ++i) {
            const double di = v.features[i] - mean[i];
            for (std::size_t j = i; j < n; ++j) cov[i * n + j] += di * (v.features[j] - mean[j]);
        }
    }
    CorrelationMatrix out;
    out.n = static_cast<int>(n);
    out.values.assign(n * n, std::nullopt);
    // relative threshold: exactly duplicated features can leave round-off residue
    std::vector<bool> degenerate(n);
    for (std::size_t i = 0; i < n; ++i) {
        degenerate[i] = cov[i * n + i] <= 1e-24 * count * std::max(1.0, mean[i] * mean[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            if (degenerate[i] || degenerate[j]) continue;
            double r = i == j ? 1.0 : cov[i * n + j] / std::sqrt(cov[i * n + i] * cov[j * n + j]);
            r = std::clamp(r, -1.0, 1.0);
            out.values[i * n + j] = r;
            out.values[j * n + i] = r;
        }
    }
    return out;
}

std::optional<double> CorrelationMatrix::motion_static_mean() const {
    double sum = 0.0;
    int count = 0;
    for (int m = 0; m < n; ++m) {
        if (!is_motion_dim(m)) continue;
        for (int s = 0; s < n; ++s) {
            if (is_motion_dim(s)) continue;
            const auto& v = at(m, s);
            if (!v) return std::nullopt;
            sum += *v;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

std::vector<double> prompt_embedding(std::uint64_t prompt_id, int dim, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "prompt_embedding", prompt_id));
    std::vector<double> e(static_cast<std::size_t>(dim));
    for (auto& x : e) x = rng.normal() / std::sqrt(static_cast<double>(dim));
    return e;
}

void write_corpus(std::ostream& out, const std::vector<SyntheticVideo>& corpus, int n_dims) {
    out << "video_id,prompt_id";
    for (int d = 0; d < n_dims; ++d) out << ',' << dimension_name(d);
    out << '\n';
    for (const auto& v : corpus) {
        out << v.video_id << ',' << v.prompt_id;
        for (double f : v.features) out << ',' << format_double(f);
        out << '\n';
    }
}

std::vector<SyntheticVideo> read_corpus(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("read_corpus: missing header line");
    const auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "video_id" || header[1] != "prompt_id") {
        throw InputError("read_corpus: unexpected header '" + line + "'");
    }
    const std::size_t n = header.size() - 2;
    std::vector<SyntheticVideo> corpus;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != n + 2) {
            throw InputError("read_corpus: line " + std::to_string(line_no) + " has " +
                             std::to_string(fields.size()) + " fields, expected " + std::to_string(n + 2));
        }
        SyntheticVideo v;
        try {
            v.video_id = std::stoull(fields[0]);
            v.prompt_id = std::stoull(fields[1]);
            v.features.reserve(n);
            for (std::size_t i = 0; i < n; ++i) v.features.push_back(std::stod(fields[i + 2]));
        } catch (const std::exception&) {
            throw InputError("read_corpus: malformed number on line " + std::to_string(line_no));
        }
        corpus.push_back(std::move(v));
    }
    return corpus;
}

void write_instances(std::ostream& out, const std::vector<DimInstance>& instances) {
    out << "video_id,dim,label\n";
    for (const auto& inst : instances) {
        out << inst.video.video_id << ',' << inst.dim << ',' << inst.label << '\n';
    }
}

}  // namespace mcsc
