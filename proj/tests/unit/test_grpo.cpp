#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "mcsc/errors.hpp"
#include "mcsc/grpo.hpp"
#include "mcsc/rubric.hpp"
#include "oracles.hpp"

using namespace mcsc;

TEST_CASE("advantages: hand values") {
    const std::vector<double> r{0, 1, 2, 3};
    const auto a = compute_advantages(r);
    // mean 1.5, population std sqrt(1.25)
    const double sd = std::sqrt(1.25);
    CHECK(a[0] == doctest::Approx(-1.5 / sd).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(-0.5 / sd).epsilon(1e-12));
    CHECK(a[0] == doctest::Approx(-1.3416407865));
    CHECK(a[2] == doctest::Approx(0.4472135955));
    CHECK(a[3] == doctest::Approx(1.3416407865));
    CHECK(compute_advantages(std::vector<double>{0, 2}) == std::vector<double>{-1, 1});
    CHECK(compute_advantages(std::vector<double>{1, 1, 1}) == std::vector<double>{0, 0, 0});
    // constant groups stay exactly zero after a shift
    CHECK(compute_advantages(std::vector<double>{0.1 + 2, 0.1 + 2, 0.1 + 2}) == std::vector<double>{0, 0, 0});
    CHECK_THROWS_AS(compute_advantages(std::vector<double>{1}), InputError);
    CHECK_THROWS_AS(compute_advantages(std::vector<double>{1, NAN}), InputError);
}

using oracles::random_policy;
using oracles::small_shape;

namespace {

TaskInput random_input(Rng& rng, bool pair) { return oracles::random_input(rng, 3, 3, pair); }

}  // namespace

TEST_CASE("identity policy: zero loss, zero KL") {
    const auto s = small_shape();
    Rng rng(2);
    const auto p = random_policy(s, rng, 0.5);
    std::vector<RolloutGroup> groups;
    for (int g = 0; g < 3; ++g) {
        auto grp = sample_group(p, random_input(rng, g == 1), 6, rng);
        for (auto& r : grp.responses) r.reward = rng.uniform();
        groups.push_back(std::move(grp));
    }
    const auto obj = grpo_objective(p, p, groups, GrpoConfig{});
    CHECK(std::abs(obj.loss) < 1e-12);
    CHECK(obj.kl == 0.0);
}

TEST_CASE("analytic gradient matches central differences, clipped branch included") {
    Rng rng(17);
    GrpoConfig cfg;
    cfg.group_size = 4;
    int clipped_instances = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const auto r = oracles::grpo_fd_instance(rng, cfg);
        CHECK(r.rel_error < 1e-4);
        CHECK(r.untouched_zero);
        clipped_instances += r.clipped_actions > 0 ? 1 : 0;
    }
    CHECK(clipped_instances > 10);
}

TEST_CASE("KL is non-negative and vanishes only at the reference") {
    const auto s = small_shape();
    Rng rng(8);
    const auto p = random_policy(s, rng, 0.5);
    auto q = p;
    q.logits()[s.value_offset()] += 0.3;
    auto grp = sample_group(p, random_input(rng, false), 4, rng);
    for (auto& r : grp.responses) r.reward = rng.uniform();
    std::vector<RolloutGroup> groups{grp};
    CHECK(grpo_objective(p, p, groups, {}).kl == 0.0);
    for (int i = 0; i < 10; ++i) {
        const auto other = random_policy(s, rng, 0.5);
        CHECK(grpo_objective(p, other, groups, {}).kl > 0.0);
    }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    const auto s = small_shape();
    Rng rng(3);
    auto p = random_policy(s, rng, 0.5);
    const auto before = p;
    auto grp = sample_group(p, random_input(rng, true), 4, rng);
    for (auto& r : grp.responses) r.reward = rng.uniform();
    std::vector<RolloutGroup> groups{grp};
    GrpoConfig cfg;
    cfg.optimizer.learning_rate = 0.0;
    OptimizerState st;
    grpo_step(p, before, groups, cfg, st);
    CHECK(p == before);
}

TEST_CASE("non-finite gradient aborts without touching state") {
    std::vector<double> params{1.0, 2.0};
    OptimizerState st;
    const std::vector<double> bad{0.1, INFINITY};
    CHECK_THROWS_AS(apply_update(params, bad, OptimizerConfig{}, st), TrainingError);
    CHECK(params == std::vector<double>{1.0, 2.0});
    CHECK(st.step == 0);
}

TEST_CASE("linear learning-rate decay") {
    OptimizerConfig c;
    c.learning_rate = 1.0;
    c.decay_steps = 4;
    CHECK(c.rate_at(0) == 1.0);
    CHECK(c.rate_at(2) == 0.5);
    CHECK(c.rate_at(4) == 0.0);
    CHECK(c.rate_at(9) == 0.0);
}

TEST_CASE("checkpoint resume reproduces the uninterrupted run") {
    PolicyShape s;
    Rng rng(1);
    std::vector<TaskInput> data;
    for (int i = 0; i < 20; ++i) {
        std::vector<double> f(5);
        for (auto& x : f) x = rng.uniform();
        data.emplace_back(ScdrQuery{f, i % 5, 1 + i % 5});
    }
    const auto ref = PolicyParams::with_format_prior(s, 6.0);
    GrpoRun run;
    run.dataset = &data;
    run.reference = &ref;
    run.seed = 77;
    run.reward = [](const TaskInput& in, const Rollout& r) {
        return scdr_reward(r.segments.front(), std::get<ScdrQuery>(in).label).total();
    };
    GrpoConfig cfg;
    cfg.batch_size = 4;

    auto full = ref;
    OptimizerState full_state;
    run_grpo(full, full_state, cfg, run, 6);

    auto half = ref;
    OptimizerState half_state;
    run_grpo(half, half_state, cfg, run, 3);
    const auto path = (std::filesystem::temp_directory_path() / "mcsc_test_ckpt.json").string();
    save_checkpoint(path, {half, half_state, "h"});
    auto loaded = load_checkpoint(path);
    CHECK(loaded.policy == half);
    CHECK(loaded.optimizer == half_state);
    run_grpo(loaded.policy, loaded.optimizer, cfg, run, 3);
    CHECK(loaded.policy == full);
    CHECK(loaded.optimizer == full_state);
    std::filesystem::remove(path);
}

TEST_CASE("group sampling returns G responses") {
    const auto p = PolicyParams::with_format_prior(PolicyShape{}, 6.0);
    Rng rng(1);
    const TaskInput in = ScdrQuery{{0.5, 0.5, 0.5, 0.5, 0.5}, 0, 3};
    CHECK(sample_group(p, in, 8, rng).responses.size() == 8);
}

TEST_CASE("single-example bandit converges on the rewarded rating") {
    const PolicyShape s;
    const auto ref = PolicyParams::with_format_prior(s, 6.0);
    auto policy = ref;
    const std::vector<TaskInput> data{ScdrQuery{{0.9, 0.2, 0.5, 0.5, 0.5}, 2, 4}};
    // rating row used for this query
    const auto probe = decode(policy, data.front(), Decoding::Greedy, nullptr);
    int rate_row = -1;
    for (const auto& st : probe.steps) {
        if (st.kind == s.kind_rate()) rate_row = st.rate_row;
    }
    REQUIRE(rate_row >= 0);
    auto p_correct = [&](const PolicyParams& p) {
        const auto row = p.value_row(rate_row);
        double z = 0;
        for (double x : row) z += std::exp(x);
        return std::exp(row[3]) / z;
    };
    CHECK(p_correct(policy) == doctest::Approx(0.2));

    GrpoRun run;
    run.dataset = &data;
    run.reference = &ref;
    run.seed = 5;
    run.reward = [](const TaskInput& in, const Rollout& r) {
        return scdr_reward(r.segments.front(), std::get<ScdrQuery>(in).label).accuracy * 1.0;
    };
    long reached = -1;
    run.on_step = [&](const GrpoMetrics& m, const PolicyParams& p) {
        if (p_correct(p) > 0.99) {
            reached = m.step;
            return false;
        }
        return true;
    };
    GrpoConfig cfg;
    cfg.batch_size = 1;
    OptimizerState st;
    run_grpo(policy, st, cfg, run, 500);
    CHECK(reached >= 0);
}
