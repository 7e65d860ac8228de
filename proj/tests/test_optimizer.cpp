#include <doctest.h>

#include <cmath>

#include "siren/optimizer.hpp"
#include "helpers.hpp"

using namespace siren;

namespace {

AudioClip test_carrier(size_t n, uint64_t seed) {
    AudioClip clip = testutil::noise_clip(n, seed, 0.2);
    return normalize(clip);
}

Perturbation init_from(const std::vector<double>& delta) {
    Perturbation p;
    p.delta = delta;
    p.stage = PerturbStage::Init;
    p.meta = InitMeta{0, 1.0};
    return p;
}

}  // namespace

TEST_CASE("clip_to_carrier enforces the element-wise bound") {
    std::vector<double> carrier = {0.5, -0.2, 0.0, 0.1};
    std::vector<double> delta = {1.0, -1.0, 0.5, 0.001};
    std::vector<double> clipped = clip_to_carrier(delta, carrier, 0.1);
    CHECK(clipped[0] == doctest::Approx(0.05));
    CHECK(clipped[1] == doctest::Approx(-0.02));
    CHECK(clipped[2] == 0.0);
    CHECK(clipped[3] == 0.001);  // already within bound, untouched
    for (size_t i = 0; i < delta.size(); ++i)
        CHECK(std::fabs(clipped[i]) <= 0.1 * std::fabs(carrier[i]));
}

TEST_CASE("outer_update identities") {
    std::vector<double> d0 = {0.1, -0.2, 0.3};
    std::vector<double> d1 = {0.5, 0.5, -0.5};
    std::vector<double> d2 = {-0.1, 0.1, 0.1};

    // eta = 0: no update
    std::vector<double> none = outer_update({d1, d2}, d0, 0.0);
    for (size_t i = 0; i < d0.size(); ++i) CHECK(none[i] == d0[i]);

    // eta = 1: complete update to the mean
    std::vector<double> full = outer_update({d1, d2}, d0, 1.0);
    for (size_t i = 0; i < d0.size(); ++i)
        CHECK(full[i] == doctest::Approx(0.5 * (d1[i] + d2[i])));

    // K = 1, eta = 0.5, d0 = 0: half of the single delta
    std::vector<double> zero(3, 0.0);
    std::vector<double> half = outer_update({d1}, zero, 0.5);
    for (size_t i = 0; i < d1.size(); ++i) CHECK(half[i] == doctest::Approx(0.5 * d1[i]));
}

TEST_CASE("outer_update output lies between d0 and the mean per coordinate") {
    SeededRng rng(8);
    std::vector<double> d0(64), a(64), b(64);
    for (size_t i = 0; i < 64; ++i) {
        d0[i] = rng.next_gaussian();
        a[i] = rng.next_gaussian();
        b[i] = rng.next_gaussian();
    }
    for (double eta : {0.0, 0.3, 0.7, 1.0}) {
        std::vector<double> out = outer_update({a, b}, d0, eta);
        for (size_t i = 0; i < 64; ++i) {
            double mean = 0.5 * (a[i] + b[i]);
            double lo = std::min(d0[i], mean) - 1e-12;
            double hi = std::max(d0[i], mean) + 1e-12;
            CHECK(out[i] >= lo);
            CHECK(out[i] <= hi);
        }
    }
}

TEST_CASE("inner_step with j=1 is one clipped gradient step") {
    AudioClip carrier = test_carrier(600, 1);
    auto mock = std::make_shared<ThresholdMock>("m", "go", 0.6, 0, 600);

    AttackConfig config;
    config.alpha = 0.5;
    config.epsilon = 0.05;
    config.sigma_std = 0.0;
    config.weights = {0.0, 0.0};

    SeqEnsembleOptimizer opt(carrier, "go", std::nullopt, config);
    std::vector<double> d0 = testutil::noise_clip(600, 2, 0.005).samples;
    std::vector<double> got = opt.inner_step(1, *mock, {d0});

    AudioClip adv = carrier;
    for (size_t i = 0; i < d0.size(); ++i) adv.samples[i] += d0[i];
    std::vector<double> g = mock->loss_gradient(adv, "go");
    std::vector<double> want(600);
    for (size_t i = 0; i < 600; ++i) want[i] = d0[i] - config.alpha * g[i];
    want = clip_to_carrier(want, carrier.samples, config.epsilon);
    for (size_t i = 0; i < 600; ++i) CHECK(got[i] == want[i]);
}

TEST_CASE("zero alpha and zero noise reduce the inner step to clipping") {
    AudioClip carrier = test_carrier(400, 3);
    auto mock = std::make_shared<ThresholdMock>("m", "go", 0.9, 0, 400);

    AttackConfig config;
    config.alpha = 0.0;
    config.sigma_std = 0.0;
    config.epsilon = 0.05;
    config.weights = {0.0, 0.0};

    SeqEnsembleOptimizer opt(carrier, "go", std::nullopt, config);
    std::vector<double> d0 = testutil::noise_clip(400, 4, 0.01).samples;
    std::vector<double> got = opt.inner_step(1, *mock, {d0});
    std::vector<double> want = clip_to_carrier(d0, carrier.samples, config.epsilon);
    for (size_t i = 0; i < 400; ++i) CHECK(got[i] == want[i]);
}

TEST_CASE("clip bound holds after every inner step on random inputs") {
    AudioClip carrier = test_carrier(500, 5);
    auto m1 = std::make_shared<ThresholdMock>("m1", "go", 0.7, 0, 250);
    auto m2 = std::make_shared<ThresholdMock>("m2", "go", 0.8, 250, 500);

    AttackConfig config;
    config.alpha = 0.3;
    config.epsilon = 0.05;
    config.sigma_std = 0.002;
    config.weights = {0.05, 0.0};
    config.seed = 11;

    SeqEnsembleOptimizer opt(carrier, "go", std::nullopt, config);
    std::vector<std::vector<double>> deltas = {testutil::noise_clip(500, 6, 0.01).samples};
    std::vector<const SurrogateModel*> models = {m1.get(), m2.get()};
    for (size_t j = 1; j <= 2; ++j) {
        deltas.push_back(opt.inner_step(j, *models[j - 1], deltas));
        const auto& d = deltas.back();
        for (size_t i = 0; i < d.size(); ++i)
            CHECK(std::fabs(d[i]) - config.epsilon * std::fabs(carrier.samples[i]) <= 0.0);
    }
}

// K = 1, eta = 1, no noise, no auxiliary terms: the whole loop must walk the
// same trajectory as plain clipped gradient descent, step for step.
TEST_CASE("degenerate configuration reproduces plain clipped gradient descent") {
    AudioClip carrier = test_carrier(400, 7);
    auto mock = std::make_shared<ThresholdMock>("m", "go", 0.9, 0, 400);

    AttackConfig config;
    config.alpha = 0.2;
    config.epsilon = 0.05;
    config.eta = 1.0;
    config.sigma_std = 0.0;
    config.weights = {0.0, 0.0};
    config.max_steps = 50;

    std::vector<double> start =
        clip_to_carrier(testutil::noise_clip(400, 8, 0.01).samples, carrier.samples, 0.05);

    // Independent reference: delta <- clip(delta - alpha * grad(x + delta)).
    std::vector<double> ref = start;
    std::vector<std::vector<double>> ref_steps;
    for (int step = 0; step < config.max_steps; ++step) {
        AudioClip adv = carrier;
        for (size_t i = 0; i < ref.size(); ++i) adv.samples[i] += ref[i];
        std::vector<double> g = mock->loss_gradient(adv, "go");
        for (size_t i = 0; i < ref.size(); ++i) ref[i] -= config.alpha * g[i];
        ref = clip_to_carrier(ref, carrier.samples, config.epsilon);
        ref_steps.push_back(ref);
    }

    // Drive the optimizer manually to compare per step.
    SeqEnsembleOptimizer opt(carrier, "go", std::nullopt, config);
    std::vector<double> delta = start;
    for (int step = 0; step < config.max_steps; ++step) {
        std::vector<double> d_j = opt.inner_step(1, *mock, {delta});
        delta = outer_update({d_j}, delta, 1.0);
        delta = clip_to_carrier(delta, carrier.samples, config.epsilon);
        for (size_t i = 0; i < delta.size(); ++i) {
            double want = ref_steps[step][i];
            CHECK(std::fabs(delta[i] - want) <= 1e-9 * std::max(1.0, std::fabs(want)));
        }
    }

    // And the packaged run ends at the same final delta.
    SurrogateEnsemble ensemble({mock}, 99);
    SeqEnsembleOptimizer opt2(carrier, "go", std::nullopt, config);
    AttackResult result = opt2.run(ensemble, init_from(start));
    for (size_t i = 0; i < ref.size(); ++i)
        CHECK(std::fabs(result.final_delta.delta[i] - ref[i]) <=
              1e-9 * std::max(1.0, std::fabs(ref[i])));
}

TEST_CASE("always-accepting ensemble adds one example per outer step") {
    AudioClip carrier = test_carrier(300, 9);
    auto a = ThresholdMock::always_accept("a", "go");
    auto b = ThresholdMock::always_accept("b", "go");
    SurrogateEnsemble ensemble({a, b}, 4);

    AttackConfig config;
    config.alpha = 0.01;
    config.max_steps = 7;
    config.weights = {0.0, 0.0};
    config.sigma_std = 0.001;
    config.seed = 21;

    SeqEnsembleOptimizer opt(carrier, "go", std::nullopt, config);
    AttackResult result = opt.run(ensemble, init_from(std::vector<double>(300, 0.0)));
    CHECK(result.valid_set.size() == 7);
    CHECK(result.trace.size() == 7);
    for (size_t i = 0; i < result.valid_set.size(); ++i) {
        CHECK(result.valid_set[i].step == static_cast<int>(i) + 1);  // grows, never mutated
        const auto& ex = result.valid_set[i];
        for (size_t s = 0; s < ex.delta.size(); ++s)
            CHECK(std::fabs(ex.delta[s]) - config.epsilon * std::fabs(carrier.samples[s]) <= 0.0);
    }
}

TEST_CASE("fixed seed gives bitwise identical runs") {
    AudioClip carrier = test_carrier(350, 10);
    AttackConfig config;
    config.alpha = 0.05;
    config.sigma_std = 0.01;
    config.max_steps = 6;
    config.weights = {0.05, 0.0};
    config.seed = 77;

    auto make_ensemble = [] {
        auto m1 = std::make_shared<ThresholdMock>("m1", "go", 0.5, 0, 350);
        auto m2 = std::make_shared<ThresholdMock>("m2", "go", 0.4, 100, 300);
        return SurrogateEnsemble({m1, m2}, 123);
    };

    std::vector<double> start = testutil::noise_clip(350, 11, 0.005).samples;

    SurrogateEnsemble e1 = make_ensemble();
    SeqEnsembleOptimizer o1(carrier, "go", std::nullopt, config);
    AttackResult r1 = o1.run(e1, init_from(start));

    SurrogateEnsemble e2 = make_ensemble();
    SeqEnsembleOptimizer o2(carrier, "go", std::nullopt, config);
    AttackResult r2 = o2.run(e2, init_from(start));

    REQUIRE(r1.final_delta.delta.size() == r2.final_delta.delta.size());
    for (size_t i = 0; i < r1.final_delta.delta.size(); ++i)
        CHECK(r1.final_delta.delta[i] == r2.final_delta.delta[i]);
    CHECK(r1.valid_set.size() == r2.valid_set.size());
    REQUIRE(r1.trace.size() == r2.trace.size());
    for (size_t s = 0; s < r1.trace.size(); ++s)
        CHECK(r1.trace[s].losses[0].loss.total == r2.trace[s].losses[0].loss.total);
}

TEST_CASE("eta zero keeps a clipped delta fixed through a run") {
    AudioClip carrier = test_carrier(200, 12);
    auto mock = std::make_shared<ThresholdMock>("m", "go", 0.9, 0, 200);
    SurrogateEnsemble ensemble({mock}, 5);

    AttackConfig config;
    config.alpha = 0.4;
    config.eta = 0.0;
    config.sigma_std = 0.0;
    config.max_steps = 5;
    config.weights = {0.0, 0.0};

    std::vector<double> start =
        clip_to_carrier(testutil::noise_clip(200, 13, 0.01).samples, carrier.samples, 0.05);
    SeqEnsembleOptimizer opt(carrier, "go", std::nullopt, config);
    AttackResult result = opt.run(ensemble, init_from(start));
    for (size_t i = 0; i < start.size(); ++i) CHECK(result.final_delta.delta[i] == start[i]);
}

TEST_CASE("stop after first valid example") {
    AudioClip carrier = test_carrier(300, 14);
    auto mock = ThresholdMock::always_accept("m", "go");
    SurrogateEnsemble ensemble({mock}, 6);

    AttackConfig config;
    config.max_steps = 50;
    config.weights = {0.0, 0.0};
    config.stop_after_first_valid = true;

    SeqEnsembleOptimizer opt(carrier, "go", std::nullopt, config);
    AttackResult result = opt.run(ensemble, init_from(std::vector<double>(300, 0.0)));
    CHECK(result.valid_set.size() == 1);
    CHECK(result.trace.size() == 1);
}
