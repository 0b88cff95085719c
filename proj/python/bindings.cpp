// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mcsc/errors.hpp"
#include "mcsc/grpo.hpp"
#include "mcsc/mcdpo.hpp"
#include "mcsc/metrics.hpp"
#include "mcsc/pipeline.hpp"
#include "mcsc/response.hpp"
#include "mcsc/rubric.hpp"
#include "mcsc/world.hpp"

namespace py = pybind11;
using namespace mcsc;

namespace {

Verdict verdict_from(const std::string& s) {
    if (s == "A") return Verdict::A;
    if (s == "B") return Verdict::B;
    if (s == "TIE") return Verdict::Tie;
    throw InputError("verdict must be A, B or TIE, got '" + s + "'");
}

std::vector<Verdict> verdicts_from(const std::vector<std::string>& v) {
    std::vector<Verdict> out;
    for (const auto& s : v) out.push_back(verdict_from(s));
    return out;
}

RunConfig make_config(const std::optional<std::string>& config_path, std::optional<std::uint64_t> seed,
                      const std::map<std::string, std::string>& overrides) {
    auto c = config_path ? RunConfig::from_file(*config_path) : RunConfig::from_profile("desk");
    for (const auto& [k, v] : overrides) c.set(k, v);
    if (seed) c.set("seed", std::to_string(*seed));
    c.validate();
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-dimensional reward modelling and motion-corrective alignment (C++ core)";

    py::handle base(PyErr_NewException("mcsc._core.McscError", PyExc_RuntimeError, nullptr));
    m.attr("McscError") = base;
    py::register_exception<ConfigError>(m, "ConfigError", base);
    py::register_exception<InputError>(m, "InputError", base);
    py::register_exception<IoError>(m, "IoError", base);
    py::register_exception<TrainingError>(m, "TrainingError", base);
    py::register_exception<UndefinedResultError>(m, "UndefinedResultError", base);

    m.def("compute_advantages", [](const std::vector<double>& r) { return compute_advantages(r); }, py::arg("rewards"));

    m.def(
        "motion_weights",
        [](double w_om, double l_om, double w_cm, double l_cm) {
            const auto w = motion_weights(w_om, l_om, w_cm, l_cm);
            return py::make_tuple(w.winner, w.loser);
        },
        py::arg("s_w_om"), py::arg("s_l_om"), py::arg("s_w_cm"), py::arg("s_l_cm"));

    m.def(
        "scdr_reward",
        [](const std::string& text, int label) {
            const auto r = scdr_reward(from_text(text), label);
            return py::make_tuple(r.format, r.accuracy, r.self_critic);
        },
        py::arg("text"), py::arg("label"), "(r_format, r_acc, r_sc) for a whitespace-separated token string");
    m.def(
        "hcr_reward",
        [](const std::string& a, const std::string& b, const std::string& truth) {
            const auto sb = from_text(b);
            const auto r = hcr_reward(from_text(a), sb, extract_verdict(sb), verdict_from(truth));
            return py::make_tuple(r.hier, r.dim, r.comparison);
        },
        py::arg("response_a"), py::arg("response_b"), py::arg("truth"));
    m.def("format_score_scdr", [](const std::string& t) { return format_score_scdr(from_text(t)); });
    m.def("format_score_hcr", [](const std::string& t) { return format_score_hcr(from_text(t)); });
    m.def("hier_format_score", [](const std::string& t) { return hier_format_score(from_text(t)); });
    m.def("dim_format_score", [](const std::string& t) { return dim_format_score(from_text(t)); });

    m.def(
        "preference_accuracy",
        [](const std::vector<std::string>& pred, const std::vector<std::string>& label, const std::string& mode) {
            return preference_accuracy(verdicts_from(pred), verdicts_from(label), pref_mode_from_string(mode));
        },
        py::arg("predictions"), py::arg("labels"), py::arg("mode") = "tau");
    m.def(
        "dim_accuracy", [](const std::vector<int>& p, const std::vector<int>& l) { return dim_accuracy(p, l); },
        py::arg("predictions"), py::arg("labels"));

    m.def(
        "generate_corpus",
        [](int n_prompts, int videos_per_prompt, std::uint64_t seed, double motion_quality_corr) {
            WorldConfig w;
            w.seed = seed;
            w.motion_quality_corr = motion_quality_corr;
            std::vector<std::vector<double>> out;
            for (auto& v : generate_corpus(w, n_prompts, videos_per_prompt)) out.push_back(std::move(v.features));
            return out;
        },
        py::arg("n_prompts"), py::arg("videos_per_prompt") = 4, py::arg("seed") = 0,
        py::arg("motion_quality_corr") = -0.6, "Feature rows of a synthetic corpus");

    auto cmd = [&m](const char* name, auto fn, const char* doc) {
        m.def(
            name,
            [fn](const std::string& out, const std::optional<std::string>& config, std::optional<std::uint64_t> seed,
                 const std::map<std::string, std::string>& overrides) {
                const auto cfg = make_config(config, seed, overrides);
                const auto root = resolve_out_root(out);
                py::gil_scoped_release release;
                return fn(cfg, root);
            },
            py::arg("out") = "", py::arg("config") = py::none(), py::arg("seed") = py::none(),
            py::arg("overrides") = std::map<std::string, std::string>{}, doc);
    };
    cmd("gen_world", [](const RunConfig& c, const std::filesystem::path& o) { return cmd_gen_world(c, o); },
        "Generate the world; returns the summary JSON string");
    cmd("train_scdr", [](const RunConfig& c, const std::filesystem::path& o) { return cmd_train_scdr(c, o); },
        "Train single-dimension reasoning");
    cmd("train_hcr", [](const RunConfig& c, const std::filesystem::path& o) { return cmd_train_hcr(c, o); },
        "Train pairwise reasoning from the ScDR checkpoint");
    cmd("align", [](const RunConfig& c, const std::filesystem::path& o) { return cmd_align(c, o); },
        "Align the toy generator with the configured mode");
    cmd("evaluate", [](const RunConfig& c, const std::filesystem::path& o) { return cmd_eval(c, o); },
        "Evaluate artifacts and write the report");
}
