#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "mcsc/errors.hpp"
#include "mcsc/mcdpo.hpp"
#include "mcsc/numeric.hpp"
#include "oracles.hpp"

using namespace mcsc;
using oracles::perturbed;
using oracles::random_pair;

namespace {

SyntheticVideo video(std::uint64_t id, std::vector<double> f) { return {id, 0, std::move(f)}; }

RmScores scores(double overall, double om = 0.5, double cm = 0.5) { return {overall, {om, cm, 0.5, 0.5, 0.5}}; }

// E[clamp(mu + sigma Z, 0, 1)]
double clamped_normal_mean(double mu, double sigma) {
    const double a = -mu / sigma, b = (1.0 - mu) / sigma;
    auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
    const double mid = mu * (normal_cdf(b) - normal_cdf(a)) + sigma * (phi(a) - phi(b));
    return mid + (1.0 - normal_cdf(b));
}

}  // namespace

TEST_CASE("motion weights") {
    const auto w = motion_weights(0.9, 0.1, 0.8, -0.4);  // sigmoid(2)
    CHECK(w.winner == doctest::Approx(1.380797).epsilon(1e-6));
    CHECK(w.loser == doctest::Approx(0.619203).epsilon(1e-6));
    const auto v = motion_weights(0.2, 0.7, 0.3, 0.8);  // sigmoid(-1)
    CHECK(v.winner == doctest::Approx(0.5 + 1.0 / (1.0 + std::exp(1.0))));
    const auto d = motion_weights(0.2, 0.7 + 0.5, 0.3, 0.8 + 0.5);  // (-1, -1): sigmoid(-2)
    CHECK(d.winner == doctest::Approx(0.619203).epsilon(1e-6));
    CHECK(d.loser == doctest::Approx(1.380797).epsilon(1e-6));
    CHECK(v.winner + v.loser == doctest::Approx(2.0));
    const auto e = motion_weights(0.4, 0.4, 0.6, 0.6);
    CHECK(e.winner == 1.0);
    CHECK(e.loser == 1.0);
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const auto r = motion_weights(rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform());
        CHECK(r.winner > 0.5);
        CHECK(r.winner < 1.5);
        CHECK(r.winner + r.loser == doctest::Approx(2.0).epsilon(1e-15));
    }
}

TEST_CASE("pair construction") {
    std::vector<SyntheticVideo> c;
    for (int i = 0; i < 4; ++i) c.push_back(video(i, {0.5, 0.5, 0.5, 0.5, 0.5}));
    const auto p = construct_pairs(3, c, {scores(0.2), scores(0.9), scores(0.5), scores(0.9)});
    REQUIRE(p);
    CHECK(p->winner.video_id == 1);
    CHECK(p->loser.video_id == 0);
    CHECK(p->prompt_id == 3);
    CHECK_FALSE(construct_pairs(3, c, {scores(0.4), scores(0.4), scores(0.4), scores(0.4)}));
    CHECK_THROWS_AS(construct_pairs(3, {c[0]}, {scores(0.4)}), InputError);
    Rng rng(6);
    for (int t = 0; t < 200; ++t) {
        std::vector<RmScores> s;
        for (int i = 0; i < 4; ++i) s.push_back(scores(std::floor(rng.uniform() * 3)));
        if (const auto q = construct_pairs(0, c, s)) {
            CHECK(s[q->winner.video_id].overall > s[q->loser.video_id].overall);
        }
    }
}

TEST_CASE("dpo reward hand case") {
    GeneratorParams g;
    g.n_dims = 2;
    g.embed_dim = 1;
    g.weight = {0.0, 0.0};
    g.bias = {0.5, 0.5};
    auto ref = g;
    const auto v = video(0, {0.5, 0.5});
    const std::vector<double> e{1.0};
    CHECK(dpo_reward(g, ref, e, v) == 0.0);
    // o = (1, 0), f = (0, 0), f_ref = (1, 1): 1 - 1
    g.bias = {0.0, 0.0};
    ref.bias = {1.0, 1.0};
    CHECK(dpo_reward(g, ref, e, video(0, {1.0, 0.0})) == 0.0);
    g.bias = {0.7, 0.5};
    ref.bias = {0.4, 0.5};
    // 0.2^2 - 0.1^2
    CHECK(dpo_reward(g, ref, e, v) == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("loss at the reference is log 2 and weights are irrelevant when motion scores tie") {
    Rng rng(1);
    const auto g = GeneratorParams::initial(5, 4, 0.5, 0.1, 0.15, 3);
    std::vector<double> e(4);
    for (auto& x : e) x = rng.normal();
    for (int i = 0; i < 20; ++i) {
        auto pair = random_pair(rng, 5);
        CHECK(dpo_loss(pair, g, g, e, 5.0).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
        const auto model = perturbed(g, rng, 0.05);
        pair.loser_scores.dims = pair.winner_scores.dims;
        const auto a = dpo_loss(pair, model, g, e, 5.0);
        const auto b = mcdpo_loss(pair, model, g, e, 5.0);
        CHECK(a.loss == b.loss);
        CHECK(a.gradient == b.gradient);
    }
}

TEST_CASE("analytic gradients match central differences") {
    Rng rng(11);
    const auto ref = GeneratorParams::initial(5, 3, 0.5, 0.1, 0.15, 9);
    for (int inst = 0; inst < 100; ++inst) {
        const auto model = perturbed(ref, rng, 0.1);
        std::vector<double> e(3);
        for (auto& x : e) x = rng.normal();
        const auto pair = random_pair(rng, 5);
        const double beta = 1.0 + 4.0 * rng.uniform();
        const std::vector<oracles::GenLoss> fns{
            [&](const GeneratorParams& m) { return dpo_loss(pair, m, ref, e, beta); },
            [&](const GeneratorParams& m) { return mcdpo_loss(pair, m, ref, e, beta); },
            [&](const GeneratorParams& m) { return sft_loss(pair, m, e); },
        };
        for (const auto& fn : fns) CHECK(oracles::generator_fd_error(fn, model) < 1e-4);
    }
}

TEST_CASE("dynamic degree") {
    const auto world = WorldConfig{};
    const auto chol = world.latent_cholesky();
    const auto prompts = make_prompts(16, 4, 2);

    auto g = GeneratorParams::initial(5, 4, 0.0, 0.0, 0.0, 1);
    g.bias = {0.6, 0.8, 0.1, 0.1, 0.1};
    Rng r0(1);
    CHECK(dynamic_degree(g, prompts, 3, chol, r0) == doctest::Approx(0.7).epsilon(1e-12));

    g.noise_scale = 0.3;
    g.bias = {0.2, 0.9, 0.5, 0.5, 0.5};
    Rng r1(2);
    const double mc = dynamic_degree(g, prompts, 4000, chol, r1);
    const double exact = 0.5 * (clamped_normal_mean(0.2, 0.3) + clamped_normal_mean(0.9, 0.3));
    // three standard errors; each per-sample value has std at most noise_scale
    CHECK(std::abs(mc - exact) < 3 * 0.3 / std::sqrt(16.0 * 4000));
}

TEST_CASE("zero learning rate keeps the generator") {
    const WorldConfig world;
    const auto init = GeneratorParams::initial(5, 8, 0.5, 0.05, 0.15, 4);
    AlignConfig cfg;
    cfg.steps = 5;
    cfg.optimizer.learning_rate = 0.0;
    const auto scorer = FeatureScorer::static_dominated(world);
    const auto res = align_run(init, make_prompts(32, 8, 1), make_prompts(8, 8, 1, 1000), scorer, world, cfg);
    CHECK(res.model == init);
    CHECK(res.history.size() == 6);
    CHECK(res.history.front().loss == doctest::Approx(std::log(2.0)));
}

TEST_CASE("flattened motion scores make mcdpo identical to dpo") {
    const WorldConfig world;
    const auto init = GeneratorParams::initial(5, 8, 0.5, 0.05, 0.15, 4);
    auto w = world.weights();
    const FeatureScorer flat(world, w, 3, true);
    AlignConfig cfg;
    cfg.steps = 20;
    const auto train = make_prompts(64, 8, 1), eval = make_prompts(8, 8, 1, 1000);
    cfg.mode = AlignMode::Dpo;
    const auto a = align_run(init, train, eval, flat, world, cfg);
    cfg.mode = AlignMode::McDpo;
    const auto b = align_run(init, train, eval, flat, world, cfg);
    CHECK(a.model == b.model);
}

TEST_CASE("alignment rejects degenerate input") {
    const WorldConfig world;
    const auto init = GeneratorParams::initial(5, 8, 0.5, 0.05, 0.0, 4);
    AlignConfig cfg;
    cfg.steps = 2;
    // zero noise and zero weights: every candidate is identical
    auto g = init;
    g.weight.assign(g.weight.size(), 0.0);
    const FeatureScorer s(world, world.weights(), 3, true);
    CHECK_THROWS_AS(align_run(g, make_prompts(4, 8, 1), make_prompts(2, 8, 2), s, world, cfg), ConfigError);
    cfg.beta = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("generator round trip") {
    const auto g = GeneratorParams::initial(5, 8, 0.5, 0.05, 0.15, 4);
    const auto path = std::string("/tmp/mcsc_test_gen.json");
    save_generator(path, g);
    CHECK(load_generator(path) == g);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_generator("/nonexistent/x.json"), IoError);
}

TEST_CASE("oracle scorer replays the world") {
    WorldConfig w;
    w.seed = 12;
    const auto scorer = FeatureScorer::oracle(w);
    const auto corpus = generate_corpus(w, 5, 4);
    for (const auto& v : corpus) {
        const auto s = scorer.score(v);
        CHECK(s.overall == doctest::Approx(oracle_utility(v, w)).epsilon(1e-12));
        for (int d = 0; d < w.n_dims; ++d) {
            Rng rng(derive_seed(w.seed, "rm_dim_scores", v.video_id));
            // the scorer draws dims in order from one stream
            int label = 0;
            for (int k = 0; k <= d; ++k) label = oracle_dim_score(v, k, w, rng);
            CHECK(s.dims[static_cast<std::size_t>(d)] == doctest::Approx(label / 5.0));
            const int bin = quantize_rating(v.features[static_cast<std::size_t>(d)], 5);
            CHECK(std::abs(label - bin) <= 1);
        }
    }
}
