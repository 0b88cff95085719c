#include <cmath>

#include "doctest.h"
#include "mcsc/policy.hpp"
#include "mcsc/rubric.hpp"

using namespace mcsc;

TEST_CASE("shape layout") {
    PolicyShape s;
    CHECK(s.n_kinds() == 10 + 5 + kDefaultFillers);
    CHECK(s.kind_stop() == s.n_kinds() - 1);
    CHECK(s.bucket(0.0) == 0);
    CHECK(s.bucket(0.999) == 9);
    CHECK(s.bucket(1.0) == 9);
    CHECK(s.verdict_row(-s.motion_range(), -s.static_range()) == 1);
    CHECK(s.verdict_row(s.motion_range(), s.static_range()) == s.verdict_rows() - 1);
    CHECK(PolicyParams(s).logits().size() == s.parameter_count());
}

TEST_CASE("format prior decodes to valid templates") {
    const auto p = PolicyParams::with_format_prior(PolicyShape{}, 6.0);
    const std::vector<double> f{0.1, 0.3, 0.5, 0.7, 0.9};
    const auto s = decode(p, ScdrQuery{f, 2, 3}, Decoding::Greedy, nullptr);
    CHECK(format_score_scdr(s.segments.front()) == 1);
    const auto h = decode(p, HcrQuery{f, f, Verdict::Tie}, Decoding::Greedy, nullptr);
    REQUIRE(h.segments.size() == 2);
    CHECK(parse_ok(parse_hcr(h.segments[0])));
    CHECK(parse_ok(parse_hcr(h.segments[1])));
    CHECK(hier_format_score(h.segments[1]) == 1);
    CHECK(dim_format_score(h.segments[1]) == 1.0);
}

TEST_CASE("steps cover every token plus one stop per segment") {
    const auto p = PolicyParams::with_format_prior(PolicyShape{}, 2.0);
    Rng rng(4);
    const std::vector<double> f{0.2, 0.4, 0.6, 0.8, 0.1};
    for (int i = 0; i < 50; ++i) {
        const auto r = decode(p, HcrQuery{f, f, Verdict::A}, Decoding::Sample, &rng);
        std::size_t tokens = 0;
        for (const auto& seg : r.segments) tokens += seg.size();
        CHECK(r.steps.size() >= tokens);
        CHECK(r.steps.size() <= tokens + r.segments.size());
        for (const auto& st : r.steps) CHECK(step_logprob(p, st) == doctest::Approx(st.old_logprob).epsilon(1e-12));
    }
}

TEST_CASE("sampling is reproducible and greedy ignores the generator") {
    const auto p = PolicyParams::with_format_prior(PolicyShape{}, 1.0);
    const TaskInput in = ScdrQuery{{0.5, 0.5, 0.5, 0.5, 0.5}, 0, 3};
    Rng a(9), b(9);
    const auto ga = sample_group(p, in, 8, a);
    const auto gb = sample_group(p, in, 8, b);
    REQUIRE(ga.responses.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(ga.responses[i].segments == gb.responses[i].segments);
    Rng c(1);
    CHECK(decode(p, in, Decoding::Greedy, &c).segments == decode(p, in, Decoding::Greedy, nullptr).segments);
}
