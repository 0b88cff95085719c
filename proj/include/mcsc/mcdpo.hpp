// SPDX-License-Identifier: Apache-2.0
//
// Preference alignment of a toy video generator: candidate scoring, pair
// construction, DPO rewards, motion-corrective weights and the weighted DPO
// loss with its analytic gradient.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcsc/optimizer.hpp"
#include "mcsc/policy.hpp"
#include "mcsc/world.hpp"

namespace mcsc {

/// Linear map from prompt embedding to a predicted feature vector.
struct GeneratorParams {
    int n_dims = kDefaultDims;
    int embed_dim = 8;
    std::vector<double> weight;  ///< row-major n_dims x embed_dim
    std::vector<double> bias;    ///< n_dims
    double noise_scale = 0.15;

    static GeneratorParams initial(int n_dims, int embed_dim, double bias_value, double weight_scale,
                                   double noise_scale, std::uint64_t seed);

    std::size_t parameter_count() const { return weight.size() + bias.size(); }
    /// Unclamped prediction f(x) = W e + b.
    std::vector<double> predict(std::span<const double> embedding) const;
    /// Flattened [weight..., bias...].
    std::vector<double> flat() const;
    void set_flat(std::span<const double> values);

    bool operator==(const GeneratorParams&) const = default;
};

struct Prompt {
    std::uint64_t prompt_id = 0;
    std::vector<double> embedding;
};

std::vector<Prompt> make_prompts(int count, int embed_dim, std::uint64_t seed, std::uint64_t first_id = 0);

/// Draws a video: prediction plus noise carrying the world's latent
/// correlation, clamped to [0, 1].
SyntheticVideo sample_video(const GeneratorParams& model, const Prompt& prompt, const std::vector<double>& world_chol,
                            std::uint64_t video_id, Rng& rng);

struct RmScores {
    double overall = 0.0;
    std::vector<double> dims;  ///< normalised per-dimension scores in [0, 1]

    double object_motion() const { return dims[kObjectMotion]; }
    double camera_motion() const { return dims[kCameraMotion]; }
};

class VideoScorer {
public:
    virtual ~VideoScorer() = default;
    virtual RmScores score(const SyntheticVideo& video) const = 0;
};

/// Scores from the world's features. The overall score is a weighted sum of
/// features; per-dimension scores are oracle ratings / rating_levels with the
/// rating noise stream keyed on (seed, video_id).
class FeatureScorer : public VideoScorer {
public:
    FeatureScorer(WorldConfig world, std::vector<double> overall_weights, std::uint64_t seed,
                  bool flatten_motion = false);

    /// The ground-truth oracle: overall score equals oracle utility.
    static FeatureScorer oracle(const WorldConfig& world);
    /// Overall score dominated by static dims (motion weight `motion_weight`
    /// per motion dim, the rest shared by static dims).
    static FeatureScorer static_dominated(const WorldConfig& world, double motion_weight = 0.05);

    RmScores score(const SyntheticVideo& video) const override;

private:
    WorldConfig world_;
    std::vector<double> weights_;
    std::uint64_t seed_;
    bool flatten_motion_;
};

/// Scores from a trained reward-model policy: per-dim scores are its greedy
/// single-dimension ratings / rating_levels and the overall score is their
/// mean.
class PolicyScorer : public VideoScorer {
public:
    explicit PolicyScorer(PolicyParams policy) : policy_(std::move(policy)) {}
    RmScores score(const SyntheticVideo& video) const override;
    /// Pairwise verdict from the policy's hierarchical response.
    std::optional<Verdict> prefer(const SyntheticVideo& a, const SyntheticVideo& b) const;

private:
    PolicyParams policy_;
};

std::vector<RmScores> score_videos(const VideoScorer& scorer, const std::vector<SyntheticVideo>& videos);

struct PreferencePair {
    std::uint64_t prompt_id = 0;
    SyntheticVideo winner;
    SyntheticVideo loser;
    RmScores winner_scores;
    RmScores loser_scores;
};

/// Winner = argmax overall score, loser = argmin, lowest index on ties.
/// nullopt when all scores are equal.
std::optional<PreferencePair> construct_pairs(std::uint64_t prompt_id, const std::vector<SyntheticVideo>& candidates,
                                              const std::vector<RmScores>& scores);

/// ||o - f_model(x)||^2 - ||o - f_ref(x)||^2 with o the video's features.
double dpo_reward(const GeneratorParams& model, const GeneratorParams& ref, std::span<const double> embedding,
                  const SyntheticVideo& video);

struct MotionWeights {
    double winner = 1.0;
    double loser = 1.0;
};

/// w_w = 0.5 + sigmoid((s_w_om - s_l_om) + (s_w_cm - s_l_cm)), w_l = 2 - w_w.
MotionWeights motion_weights(double s_w_om, double s_l_om, double s_w_cm, double s_l_cm);
MotionWeights motion_weights(const PreferencePair& pair);

struct DpoLoss {
    double loss = 0.0;
    std::vector<double> gradient;  ///< flattened like GeneratorParams::flat()
    MotionWeights weights;
};

/// softplus(beta * (w_w r_w - w_l r_l)), i.e. -log sigmoid(-beta (...)).
DpoLoss weighted_dpo_loss(const PreferencePair& pair, const GeneratorParams& model, const GeneratorParams& ref,
                          std::span<const double> embedding, double beta, MotionWeights weights);
DpoLoss dpo_loss(const PreferencePair& pair, const GeneratorParams& model, const GeneratorParams& ref,
                 std::span<const double> embedding, double beta);
DpoLoss mcdpo_loss(const PreferencePair& pair, const GeneratorParams& model, const GeneratorParams& ref,
                   std::span<const double> embedding, double beta);
/// Regression of the prediction onto the winner: ||o_w - f(x)||^2.
DpoLoss sft_loss(const PreferencePair& pair, const GeneratorParams& model, std::span<const double> embedding);

/// Mean over samples of the average motion-dimension feature of generated
/// videos, n_samples per prompt.
double dynamic_degree(const GeneratorParams& model, const std::vector<Prompt>& prompts, int n_samples,
                      const std::vector<double>& world_chol, Rng& rng);

enum class AlignMode { Sft, Dpo, McDpo };
AlignMode align_mode_from_string(const std::string& name);
std::string to_string(AlignMode mode);

struct AlignConfig {
    AlignMode mode = AlignMode::McDpo;
    double beta = 5.0;
    int candidates = 4;
    int batch_size = 32;
    int steps = 300;
    OptimizerConfig optimizer{OptimizerKind::AdamW, 1e-2};
    int eval_samples = 4;  ///< samples per evaluation prompt for dynamic degree
    std::uint64_t seed = 7;

    void validate() const;
};

struct AlignMetrics {
    long step = 0;
    double loss = 0.0;
    double w_w_mean = 0.0;
    double dynamic_degree = 0.0;
    double overall_score_mean = 0.0;
};

std::string to_jsonl(const AlignMetrics& m);

struct AlignResult {
    GeneratorParams model;
    std::vector<PreferencePair> pairs;
    std::vector<Prompt> pair_prompts;  ///< prompt of each pair, same order
    std::vector<AlignMetrics> history;  ///< entry 0 is the state before any update
    double initial_dynamic_degree = 0.0;
    double final_dynamic_degree = 0.0;
    double initial_overall_score = 0.0;
    double final_overall_score = 0.0;
};

/// Builds one preference pair per prompt from `candidates` samples of the
/// initial (reference) model, then runs `steps` minibatch optimizer steps on
/// the mode's loss with the reference frozen. Dynamic degree and mean scorer
/// overall score are measured every step on `eval_prompts` with a fixed
/// evaluation stream. Throws ConfigError if every pair is degenerate.
AlignResult align_run(const GeneratorParams& initial, const std::vector<Prompt>& train_prompts,
                      const std::vector<Prompt>& eval_prompts, const VideoScorer& scorer, const WorldConfig& world,
                      const AlignConfig& config, const std::function<void(const AlignMetrics&)>& on_step = {});

// Pair dataset: header `prompt_id,video_id_w,video_id_l,s_w,s_l,s_w_om,s_l_om,s_w_cm,s_l_cm`.
void write_pairs(std::ostream& out, const std::vector<PreferencePair>& pairs);

void save_generator(const std::string& path, const GeneratorParams& model);
GeneratorParams load_generator(const std::string& path);

}  // namespace mcsc
