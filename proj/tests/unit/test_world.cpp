#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "mcsc/errors.hpp"
#include "mcsc/world.hpp"

using namespace mcsc;

namespace {

// Pearson correlation of Phi(X), Phi(Y) for standard bivariate normals with
// correlation rho (Spearman's rho of the Gaussian copula).
double copula_uniform_corr(double rho) { return 6.0 / std::numbers::pi * std::asin(rho / 2.0); }

SyntheticVideo video(std::uint64_t id, std::vector<double> f) { return {id, 0, std::move(f)}; }

}  // namespace

TEST_CASE("uniform-space correlation matches the copula closed form") {
    WorldConfig c;
    c.seed = 11;
    const auto corpus = generate_corpus(c, 2500, 4);
    const auto m = correlation_matrix(corpus);
    const double expected = copula_uniform_corr(-0.6);
    CHECK(expected == doctest::Approx(-0.58192).epsilon(1e-4));
    for (int i = 0; i < kMotionDims; ++i) {
        for (int j = kMotionDims; j < c.n_dims; ++j) {
            REQUIRE(m.at(i, j).has_value());
            CHECK(std::abs(*m.at(i, j) - expected) < 0.04);
        }
    }
    const auto mean = m.motion_static_mean();
    REQUIRE(mean.has_value());
    CHECK(*mean >= -0.7);
    CHECK(*mean <= -0.5);
    CHECK(std::abs(*mean - c.motion_quality_corr) < 0.1);
}

TEST_CASE("zero coupling gives near-zero correlation") {
    WorldConfig c;
    c.motion_quality_corr = 0.0;
    c.seed = 3;
    const auto m = correlation_matrix(generate_corpus(c, 1000, 4));
    CHECK(std::abs(*m.motion_static_mean()) < 0.1);
}

TEST_CASE("corpus generation is deterministic and shaped") {
    WorldConfig c;
    const auto a = generate_corpus(c, 7, 3);
    const auto b = generate_corpus(c, 7, 3);
    CHECK(a == b);
    REQUIRE(a.size() == 21);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].video_id == i);
        CHECK(a[i].prompt_id == i / 3);
        for (double f : a[i].features) {
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
        }
    }
    c.seed = 99;
    CHECK(generate_corpus(c, 7, 3) != a);
}

TEST_CASE("non-PSD coupling is rejected") {
    WorldConfig c;
    c.within_group_corr = 0.0;  // cross -0.6 with independent groups is not PSD
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(generate_corpus(c, 2, 2), ConfigError);
    WorldConfig d;
    d.oracle_weights = {0.5, 0.5, 0.5, 0.0, 0.0};
    CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("quantize_rating bin edges") {
    CHECK(quantize_rating(0.0, 5) == 1);
    CHECK(quantize_rating(0.999, 5) == 5);
    CHECK(quantize_rating(1.0, 5) == 5);
    CHECK(quantize_rating(0.5, 5) == 3);
    // edges at k/5 belong to the upper bin
    CHECK(quantize_rating(0.2, 5) == 2);
    CHECK(quantize_rating(0.19999, 5) == 1);
    CHECK(quantize_rating(0.8, 5) == 5);
}

TEST_CASE("noise-free oracle dim score equals the quantized feature") {
    WorldConfig c;
    c.label_noise = 0.0;
    Rng rng(1);
    const auto v = video(0, {0.0, 0.999, 0.5, 0.3, 0.61});
    CHECK(oracle_dim_score(v, 0, c, rng) == 1);
    CHECK(oracle_dim_score(v, 1, c, rng) == 5);
    CHECK(oracle_dim_score(v, 2, c, rng) == 3);
    CHECK(oracle_dim_score(v, 3, c, rng) == 2);
    CHECK(oracle_dim_score(v, 4, c, rng) == 4);
}

TEST_CASE("default oracle weights") {
    const auto w = default_oracle_weights(5);
    CHECK(w[0] == 0.25);
    CHECK(w[1] == 0.25);
    for (int d = 2; d < 5; ++d) CHECK(w[static_cast<std::size_t>(d)] == doctest::Approx(0.5 / 3));
}

TEST_CASE("oracle preference") {
    WorldConfig c;
    const auto a = video(0, {0.4, 0.4, 0.4, 0.4, 0.4});
    CHECK(oracle_preference(a, a, c) == Verdict::Tie);

    // u(a) - u(b) = 2 * tie_epsilon via object motion only
    auto b = a;
    b.features[0] -= 2 * c.tie_epsilon / 0.25;
    CHECK(oracle_preference(a, b, c) == Verdict::A);
    CHECK(oracle_preference(b, a, c) == Verdict::B);

    WorldConfig one_hot;
    one_hot.oracle_weights = {1.0, 0.0, 0.0, 0.0, 0.0};
    one_hot.tie_epsilon = 0.05;
    const auto x = video(1, {0.9, 0.1, 0.1, 0.1, 0.1});
    const auto y = video(2, {0.2, 0.9, 0.9, 0.9, 0.9});
    CHECK(oracle_preference(x, y, one_hot) == Verdict::A);

    auto other_prompt = y;
    other_prompt.prompt_id = 5;
    CHECK_THROWS_AS(oracle_preference(x, other_prompt, c), InputError);
}

TEST_CASE("oracle preference is antisymmetric") {
    WorldConfig c;
    const auto corpus = generate_corpus(c, 50, 2);
    for (std::size_t i = 0; i + 1 < corpus.size(); i += 2) {
        CHECK(oracle_preference(corpus[i], corpus[i + 1], c) ==
              swap_verdict(oracle_preference(corpus[i + 1], corpus[i], c)));
    }
}

TEST_CASE("factorize covers every (video, dim) once and replays the label stream") {
    WorldConfig c;
    const auto corpus = generate_corpus(c, 1, 2);
    const auto inst = factorize(corpus, c);
    REQUIRE(inst.size() == 10);
    Rng replay(derive_seed(c.seed, "factorize"));
    for (std::size_t i = 0; i < inst.size(); ++i) {
        CHECK(inst[i].video == corpus[i / 5]);
        CHECK(inst[i].dim == static_cast<int>(i % 5));
        CHECK(inst[i].label == oracle_dim_score(corpus[i / 5], inst[i].dim, c, replay));
        CHECK(inst[i].label >= 1);
        CHECK(inst[i].label <= c.rating_levels);
    }
}

TEST_CASE("correlation matrix diagonal and degenerate corpus") {
    WorldConfig c;
    const auto m = correlation_matrix(generate_corpus(c, 20, 4));
    for (int i = 0; i < m.n; ++i) CHECK(*m.at(i, i) == doctest::Approx(1.0));

    std::vector<SyntheticVideo> dup(5, video(0, {0.3, 0.3, 0.3, 0.3, 0.3}));
    const auto d = correlation_matrix(dup);
    for (const auto& v : d.values) CHECK_FALSE(v.has_value());
    CHECK_FALSE(d.motion_static_mean().has_value());
}

TEST_CASE("corpus CSV round trip") {
    WorldConfig c;
    const auto corpus = generate_corpus(c, 3, 2);
    std::stringstream ss;
    write_corpus(ss, corpus, c.n_dims);
    CHECK(read_corpus(ss) == corpus);
}
