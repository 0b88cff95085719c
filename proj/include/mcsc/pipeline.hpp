// SPDX-License-Identifier: Apache-2.0
//
// End-to-end orchestration: run configuration, the five pipeline commands
// and their on-disk layout under an output root.
//
//   <out>/world/{corpus.csv, instances.csv, summary.json}
//   <out>/scdr[_answer_only]/{checkpoint.json, metrics.jsonl, summary.json}
//   <out>/hcr[_scratch]/{checkpoint.json, metrics.jsonl, eval.jsonl, summary.json}
//   <out>/align/<mode>/{generator.json, pairs.csv, metrics.jsonl}, <out>/align/report.json
//   <out>/eval/{report.json, *.csv}
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcsc/grpo.hpp"
#include "mcsc/mcdpo.hpp"
#include "mcsc/policy.hpp"
#include "mcsc/world.hpp"

namespace mcsc {

struct RunConfig {
    std::string profile = "desk";
    std::uint64_t seed = 2024;

    WorldConfig world;
    int n_prompts = 200;
    int videos_per_prompt = 4;
    double heldout_fraction = 0.2;

    PolicyShape shape;
    double format_prior = 6.0;

    GrpoConfig grpo;
    long scdr_steps = 200;
    long hcr_steps = 500;
    long hcr_eval_every = 25;
    double hcr_target_tau = 0.85;

    AlignConfig align;
    int align_prompts = 256;
    int align_eval_prompts = 64;
    int embed_dim = 8;
    double generator_bias = 0.5;
    double generator_weight_scale = 0.05;
    double generator_noise = 0.15;
    std::string align_scorer = "static";  ///< oracle | static | rm
    double scorer_motion_weight = 0.05;

    bool stage_scdr = true;
    bool stage_hcr = true;
    bool stage_align = true;

    /// Named preset: "desk" (runs in seconds) or "full" (reported
    /// hyperparameters; not sized for a laptop).
    static RunConfig from_profile(const std::string& name);
    /// Reads `key = value` lines (`#` starts a comment). A `profile` key is
    /// applied first, then every other key in file order.
    static RunConfig from_file(const std::filesystem::path& path);

    /// Sets one field; throws ConfigError on an unknown key or bad value.
    void set(const std::string& key, const std::string& value);
    /// Every key with its current value, in a fixed order.
    std::vector<std::pair<std::string, std::string>> entries() const;
    std::string dump() const;
    /// Stable hex digest of dump().
    std::string hash() const;
    void validate() const;
};

/// Output root: the explicit value if non-empty, else $MCSC_OUT, else "runs".
std::filesystem::path resolve_out_root(const std::string& explicit_out);

struct ScdrOptions {
    bool answer_only = false;  ///< r_acc only, format unenforced
    std::optional<std::filesystem::path> resume;  ///< continue from this checkpoint
    std::optional<long> steps;                    ///< overrides scdr_steps
};

struct HcrOptions {
    bool from_scratch = false;
    std::optional<std::filesystem::path> scdr_checkpoint;  ///< default <out>/scdr/checkpoint.json
};

struct AlignOptions {
    std::optional<std::string> mode;    ///< overrides align.mode
    std::optional<std::string> scorer;  ///< overrides align_scorer
    std::optional<std::filesystem::path> rm_checkpoint;  ///< default <out>/hcr/checkpoint.json
    bool compare = false;  ///< run sft, dpo and mcdpo and write a comparison report
};

// Each command returns its summary as a single-line JSON document.
std::string cmd_gen_world(const RunConfig& config, const std::filesystem::path& out);
std::string cmd_train_scdr(const RunConfig& config, const std::filesystem::path& out, const ScdrOptions& options = {});
std::string cmd_train_hcr(const RunConfig& config, const std::filesystem::path& out, const HcrOptions& options = {});
std::string cmd_align(const RunConfig& config, const std::filesystem::path& out, const AlignOptions& options = {});
std::string cmd_eval(const RunConfig& config, const std::filesystem::path& out);

/// Corpus read back from <out>/world/corpus.csv; IoError naming the path if absent.
std::vector<SyntheticVideo> load_world(const std::filesystem::path& out);

/// Generator at initialisation, identical for every alignment mode.
GeneratorParams initial_generator(const RunConfig& config);
std::vector<Prompt> align_train_prompts(const RunConfig& config);
std::vector<Prompt> align_eval_prompts(const RunConfig& config);

}  // namespace mcsc
