#include "doctest.h"
#include "mcsc/errors.hpp"
#include "mcsc/response.hpp"
#include "mcsc/rng.hpp"
#include "oracles.hpp"

using namespace mcsc;

TEST_CASE("parse_scdr accepts the canonical response") {
    const auto r = parse_scdr(from_text("<think> EVID_3 </think> <answer> RATE_3 </answer>"));
    REQUIRE(parse_ok(r));
    const auto& p = std::get<ParsedScdr>(r);
    CHECK(p.evidence == std::vector<int>{3});
    CHECK(p.answer == 3);
}

TEST_CASE("parse_scdr rejects grammar violations") {
    CHECK_FALSE(parse_ok(parse_scdr(from_text("<think> EVID_3 </think> <answer> RATE_3"))));
    CHECK_FALSE(parse_ok(parse_scdr(from_text("<think> EVID_3 </think> <answer> RATE_3 </answer> FILLER_0"))));
    CHECK_FALSE(parse_ok(parse_scdr({})));
    CHECK(format_score_scdr({}) == 0);
    CHECK(format_score_scdr(from_text("<think> EVID_3 </think>")) == 0);
    CHECK(format_score_scdr(from_text("<think> EVID_2 FILLER_1 EVID_4 </think> <answer> RATE_2 </answer>")) == 1);
}

TEST_CASE("parse_hcr") {
    const auto ok = parse_hcr(
        from_text("<dim> DIM_0 EVID_4 RATE_4 </dim> <dim> DIM_2 EVID_1 RATE_2 </dim> PREFER_A"));
    REQUIRE(parse_ok(ok));
    const auto& p = std::get<ParsedHcr>(ok);
    CHECK(p.blocks.size() == 2);
    CHECK(p.blocks[1].dim == 2);
    CHECK(p.blocks[1].verdict == 2);
    CHECK(p.final_verdict == Verdict::A);

    CHECK_FALSE(parse_ok(parse_hcr(from_text("<dim> DIM_0 EVID_4 RATE_4 </dim> <dim> DIM_0 EVID_1 RATE_2 </dim> PREFER_A"))));
    CHECK_FALSE(parse_ok(parse_hcr(from_text("<dim> DIM_0 EVID_4 RATE_4 </dim>"))));
}

TEST_CASE("hier and dim format scores") {
    const auto full = from_text(
        "<dim> DIM_0 EVID_3 RATE_3 </dim> <dim> DIM_1 EVID_3 RATE_3 </dim> <dim> DIM_2 EVID_3 RATE_3 </dim> "
        "<dim> DIM_3 EVID_3 RATE_3 </dim> <dim> DIM_4 EVID_3 RATE_3 </dim> PREFER_B");
    CHECK(hier_format_score(full) == 1);
    CHECK(dim_format_score(full) == 1.0);

    const auto three = from_text(
        "<dim> DIM_0 EVID_3 RATE_3 </dim> <dim> DIM_1 EVID_3 RATE_3 </dim> <dim> DIM_2 EVID_3 RATE_3 </dim> "
        "<dim> DIM_3 RATE_3 </dim> <dim> DIM_4 EVID_3 </dim> PREFER_B");
    CHECK(hier_format_score(three) == 1);
    CHECK(dim_format_score(three) == doctest::Approx(0.6));

    auto no_verdict = full;
    no_verdict.pop_back();
    CHECK(hier_format_score(no_verdict) == 0);
    CHECK(dim_format_score(no_verdict) == 1.0);
}

TEST_CASE("text encoding") {
    const auto seq = from_text("<think> EVID_3 FILLER_1 </think> <answer> RATE_3 </answer> PREFER_TIE DIM_4");
    CHECK(from_text(to_text(seq)) == seq);
    CHECK_THROWS_AS(from_text("<think> BOGUS </think>"), InputError);
    CHECK_THROWS_AS(from_text("EVID_x"), InputError);
}

using oracles::random_hcr;
using oracles::random_scdr;

TEST_CASE("render then parse is the identity") {
    Rng rng(5);
    FormatLimits l;
    for (int i = 0; i < 500; ++i) {
        const auto s = random_scdr(rng, l);
        const auto rs = parse_scdr(render(s), l);
        REQUIRE(parse_ok(rs));
        CHECK(std::get<ParsedScdr>(rs) == s);
        const auto h = random_hcr(rng, l);
        const auto rh = parse_hcr(render(h), l);
        REQUIRE(parse_ok(rh));
        CHECK(std::get<ParsedHcr>(rh) == h);
    }
}

TEST_CASE("deleting any token of a minimal response breaks the format") {
    const auto minimal = from_text("<think> EVID_2 </think> <answer> RATE_2 </answer>");
    for (std::size_t i = 0; i < minimal.size(); ++i) {
        auto s = minimal;
        s.erase(s.begin() + static_cast<std::ptrdiff_t>(i));
        CHECK(format_score_scdr(s) == 0);
    }
    const auto hmin = from_text("<dim> DIM_0 EVID_2 RATE_2 </dim> PREFER_A");
    for (std::size_t i = 0; i < hmin.size(); ++i) {
        auto s = hmin;
        s.erase(s.begin() + static_cast<std::ptrdiff_t>(i));
        CHECK(format_score_hcr(s) == 0);
    }
}
