// SPDX-License-Identifier: Apache-2.0
//
// mcsc: command-line driver for the reward-model and alignment pipeline.
//
// Every subcommand accepts --config, --seed and --out. The output root
// defaults to $MCSC_OUT, then ./runs. On success the command's summary is
// printed as one JSON line on stdout; on failure one JSON line
// {"error": {"type": ..., "message": ...}} goes to stderr and the exit code
// identifies the error class.
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mcsc/errors.hpp"
#include "mcsc/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kConfig = 2, kInput = 3, kIo = 4, kTraining = 5, kUndefined = 6, kUsage = 64 };

struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "key = value configuration file (default: desk profile)");
    cmd->add_option("--seed", c.seed, "master seed")->each([&c](const std::string&) { c.seed_set = true; });
    cmd->add_option("--out", c.out, "output root (default: $MCSC_OUT or ./runs)");
    cmd->add_option("--set", c.overrides, "override a configuration key, key=value (repeatable)");
}

mcsc::RunConfig build_config(const Common& c) {
    auto cfg = c.config.empty() ? mcsc::RunConfig::from_profile("desk") : mcsc::RunConfig::from_file(c.config);
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw mcsc::ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.seed_set) cfg.set("seed", std::to_string(c.seed));
    cfg.validate();
    return cfg;
}

int report_error(const char* type, const std::string& message, int code) {
    nlohmann::json j;
    j["error"] = {{"type", type}, {"message", message}};
    std::cerr << j.dump() << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-dimensional reward modelling and motion-corrective alignment on a synthetic video world"};
    app.require_subcommand(1);

    Common common;
    auto* gen = app.add_subcommand("gen-world", "generate the synthetic corpus and factorized instances");
    add_common(gen, common);

    mcsc::ScdrOptions scdr_opts;
    std::string resume;
    long scdr_steps = -1;
    auto* scdr = app.add_subcommand("train-scdr", "train single-dimension reasoning with GRPO");
    add_common(scdr, common);
    scdr->add_flag("--answer-only", scdr_opts.answer_only, "ablation: reward answer accuracy only, no format");
    scdr->add_option("--resume", resume, "continue from a checkpoint");
    scdr->add_option("--steps", scdr_steps, "number of steps (overrides scdr.steps)");

    mcsc::HcrOptions hcr_opts;
    std::string scdr_ckpt;
    auto* hcr = app.add_subcommand("train-hcr", "train hierarchical comparative reasoning with GRPO");
    add_common(hcr, common);
    hcr->add_flag("--from-scratch", hcr_opts.from_scratch, "skip the ScDR warm start");
    hcr->add_option("--scdr-checkpoint", scdr_ckpt, "ScDR checkpoint (default <out>/scdr/checkpoint.json)");

    mcsc::AlignOptions align_opts;
    std::string mode, scorer, rm_ckpt;
    auto* align = app.add_subcommand("align", "align the toy generator with sft, dpo or mcdpo");
    add_common(align, common);
    align->add_option("--mode", mode, "sft | dpo | mcdpo (overrides align.mode)");
    align->add_option("--scorer", scorer, "oracle | static | rm (overrides align.scorer)");
    align->add_option("--rm-checkpoint", rm_ckpt, "reward-model checkpoint for --scorer rm");
    align->add_flag("--compare", align_opts.compare, "run all modes and write a comparison report");

    auto* eval = app.add_subcommand("eval", "evaluate artifacts and write the report and CSV curves");
    add_common(eval, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("UsageError", e.what(), kUsage);
    }

    try {
        const auto cfg = build_config(common);
        const auto out = mcsc::resolve_out_root(common.out);
        std::string summary;
        if (*gen) {
            summary = mcsc::cmd_gen_world(cfg, out);
        } else if (*scdr) {
            if (!resume.empty()) scdr_opts.resume = resume;
            if (scdr_steps >= 0) scdr_opts.steps = scdr_steps;
            summary = mcsc::cmd_train_scdr(cfg, out, scdr_opts);
        } else if (*hcr) {
            if (!scdr_ckpt.empty()) hcr_opts.scdr_checkpoint = scdr_ckpt;
            summary = mcsc::cmd_train_hcr(cfg, out, hcr_opts);
        } else if (*align) {
            if (!mode.empty()) align_opts.mode = mode;
            if (!scorer.empty()) align_opts.scorer = scorer;
            if (!rm_ckpt.empty()) align_opts.rm_checkpoint = rm_ckpt;
            summary = mcsc::cmd_align(cfg, out, align_opts);
        } else if (*eval) {
            summary = mcsc::cmd_eval(cfg, out);
        }
        std::cout << summary << std::endl;
        return kOk;
    } catch (const mcsc::ConfigError& e) {
        return report_error("ConfigError", e.what(), kConfig);
    } catch (const mcsc::InputError& e) {
        return report_error("InputError", e.what(), kInput);
    } catch (const mcsc::IoError& e) {
        return report_error("IoError", e.what(), kIo);
    } catch (const mcsc::TrainingError& e) {
        return report_error("TrainingError", e.what(), kTraining);
    } catch (const mcsc::UndefinedResultError& e) {
        return report_error("UndefinedResultError", e.what(), kUndefined);
    } catch (const std::exception& e) {
        return report_error("InternalError", e.what(), kInternal);
    }
}
