#include <sstream>

#include "doctest.h"
#include "mcsc/errors.hpp"
#include "mcsc/metrics.hpp"

using namespace mcsc;

TEST_CASE("preference accuracy protocols") {
    const std::vector<Verdict> pred{Verdict::A, Verdict::B, Verdict::Tie};
    const std::vector<Verdict> label{Verdict::A, Verdict::Tie, Verdict::Tie};
    CHECK(preference_accuracy(pred, label, PrefMode::Diff) == 1.0);
    CHECK(preference_accuracy(pred, label, PrefMode::Tau) == doctest::Approx(2.0 / 3.0));

    const std::vector<Verdict> p2{Verdict::Tie, Verdict::B, Verdict::A, Verdict::A};
    const std::vector<Verdict> l2{Verdict::A, Verdict::B, Verdict::B, Verdict::Tie};
    CHECK(preference_accuracy(p2, l2, PrefMode::Diff) == doctest::Approx(1.0 / 3.0));
    CHECK(preference_accuracy(p2, l2, PrefMode::Tau) == 0.25);

    const std::vector<Verdict> ties{Verdict::Tie, Verdict::Tie};
    const std::vector<Verdict> ab{Verdict::A, Verdict::B};
    CHECK_THROWS_AS(preference_accuracy(ab, ties, PrefMode::Diff), UndefinedResultError);
    CHECK_THROWS_AS(preference_accuracy(std::vector<Verdict>{}, std::vector<Verdict>{}, PrefMode::Tau), InputError);
    CHECK_THROWS_AS(preference_accuracy(pred, ties, PrefMode::Tau), InputError);
    CHECK(pref_mode_from_string("tau") == PrefMode::Tau);
    CHECK_THROWS_AS(pref_mode_from_string("kendall"), ConfigError);
}

TEST_CASE("dimension accuracy") {
    const std::vector<int> p{3, 3, 2}, l{3, 2, 2};
    CHECK(dim_accuracy(p, l) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(dim_accuracy(std::vector<int>{}, std::vector<int>{}), InputError);
    CHECK_THROWS_AS(dim_accuracy(p, std::vector<int>{1}), InputError);
}

TEST_CASE("run summary skips blank lines and records malformed ones") {
    std::istringstream in(
        "{\"step\": 1, \"loss\": 2.0, \"mode\": \"x\"}\n"
        "\n"
        "{\"step\": 2, \"loss\": 4.0}\n"
        "not json\n"
        "[1, 2]\n"
        "{\"step\": 3, \"loss\": 0.0, \"kl\": 1.5}\n");
    const auto s = summarize_run(in);
    CHECK(s.records == 3);
    REQUIRE(s.malformed.size() == 2);
    CHECK(s.malformed[0].line == 4);
    CHECK(s.malformed[1].line == 5);
    const auto& loss = s.fields.at("loss");
    CHECK(loss.count == 3);
    CHECK(loss.first == 2.0);
    CHECK(loss.last == 0.0);
    CHECK(loss.mean == 2.0);
    CHECK(loss.min == 0.0);
    CHECK(loss.max == 4.0);
    CHECK(s.fields.at("kl").count == 1);
    CHECK(s.fields.count("mode") == 0);

    std::ostringstream csv;
    write_curves(csv, s, {"loss", "kl"});
    CHECK(csv.str() == "step,loss,kl\n1,2,\n2,4,\n3,0,1.5\n");
    CHECK(summary_json(s) == summary_json(s));
}
