#include <string>

#include "doctest.h"
#include "golden.hpp"
#include "mcsc/rubric.hpp"

using namespace mcsc;

TEST_CASE("accuracy and self-critic") {
    ParsedScdr p{{3}, 3};
    CHECK(accuracy_score(p, 3) == 1);
    CHECK(accuracy_score({{2}, 2}, 3) == 0);
    CHECK(accuracy_score({{4}, 4}, 3) == 0);  // off by one earns nothing

    CHECK(self_critic({{3, 3}, 3}) == 1);
    CHECK(self_critic({{2}, 4}) == 0);
    CHECK(self_critic({{2, 4}, 2}) == 1);  // tie goes to the lower rating
    CHECK(self_critic({{4, 2}, 4}) == 0);
    CHECK(implied_rating({5, 1, 5, 1, 3}) == 1);
}

TEST_CASE("scdr reward composition") {
    CHECK(scdr_reward(from_text("<think> EVID_3 </think> <answer> RATE_3 </answer>"), 3).total() == 3);
    CHECK(scdr_reward(from_text("<think> EVID_3 </think> <answer> RATE_3 </answer>"), 4).total() == 2);
    CHECK(scdr_reward(from_text("<think> EVID_3 </think> <answer> RATE_3"), 3).total() == 0);
}

TEST_CASE("pluggable critic") {
    const Critic always = [](const ParsedScdr&) { return 1; };
    CHECK(scdr_reward(from_text("<think> EVID_1 </think> <answer> RATE_4 </answer>"), 4, {}, always).total() == 3);
}

TEST_CASE("comparison score") {
    CHECK(comparison_score(Verdict::A, Verdict::A) == 1);
    CHECK(comparison_score(Verdict::A, Verdict::B) == 0);
    CHECK(comparison_score(Verdict::A, Verdict::Tie) == 0);
    CHECK(comparison_score(Verdict::Tie, Verdict::Tie) == 0);
    for (auto p : {Verdict::A, Verdict::B, Verdict::Tie}) {
        for (auto t : {Verdict::A, Verdict::B, Verdict::Tie}) {
            CHECK(comparison_score(p, t) == comparison_score(swap_verdict(p), swap_verdict(t)));
        }
    }
}

TEST_CASE("self-critic ignores fillers and evidence order") {
    const auto a = scdr_reward(from_text("<think> EVID_4 EVID_2 EVID_4 </think> <answer> RATE_4 </answer>"), 4);
    const auto b = scdr_reward(from_text("<think> FILLER_0 EVID_2 FILLER_1 EVID_4 EVID_4 </think> <answer> RATE_4 </answer>"), 4);
    CHECK(a == b);
}

TEST_CASE("golden fixture corpus") {
    const auto cases = golden::load(std::string(MCSC_FIXTURE_DIR) + "/rubric_golden.txt");
    REQUIRE(cases.size() >= 30);
    for (const auto& c : cases) {
        CAPTURE(c.line);
        if (c.hcr) {
            const auto r = hcr_reward(c.a, c.b, extract_verdict(c.b), c.truth);
            CHECK(r.hier == static_cast<int>(c.e0));
            CHECK(r.dim == doctest::Approx(c.e1).epsilon(1e-12));
            CHECK(r.comparison == static_cast<int>(c.e2));
        } else {
            const auto r = scdr_reward(c.a, c.label);
            CHECK(r.format == static_cast<int>(c.e0));
            CHECK(r.accuracy == static_cast<int>(c.e1));
            CHECK(r.self_critic == static_cast<int>(c.e2));
        }
    }
}
