#include <doctest.h>

#include <cmath>
#include <map>

#include "siren/surrogate.hpp"
#include "siren/text.hpp"
#include "siren/toy_ctc.hpp"
#include "helpers.hpp"

using namespace siren;

namespace {

AudioClip window_clip(double level, size_t n = 1000) {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.assign(n, level);
    for (size_t i = 1; i < n; i += 2) clip.samples[i] = -level;  // mean |.| == level
    return clip;
}

}  // namespace

TEST_CASE("threshold mock transcribes by window mean") {
    ThresholdMock mock("m", "play music", 0.3, 0, 1000);
    CHECK(mock.transcribe(window_clip(0.35)) == "play music");
    CHECK(mock.transcribe(window_clip(0.1)).empty());
    CHECK(mock.transcribe(window_clip(0.3)) == "play music");  // boundary accepts
}

TEST_CASE("threshold mock hinge loss and gradient") {
    ThresholdMock mock("m", "go", 0.3, 0, 1000);
    CHECK(mock.adversarial_loss(window_clip(0.3), "go") == 0.0);
    CHECK(mock.adversarial_loss(window_clip(0.2), "go") == doctest::Approx(0.01));

    // far above threshold: hinge inactive, zero gradient
    std::vector<double> g = mock.loss_gradient(window_clip(0.9), "go");
    for (double v : g) CHECK(v == 0.0);

    AudioClip active = window_clip(0.1);
    std::vector<double> grad = mock.loss_gradient(active, "go");
    REQUIRE(grad.size() == active.samples.size());
    auto f = [&](const std::vector<double>& samples) {
        return mock.adversarial_loss(AudioClip{samples, 16000}, "go");
    };
    auto coords = testutil::pick_coords(active.samples.size(), 32, 3);
    CHECK(testutil::fd_relative_error(f, active.samples, grad, coords, 1e-7) < 1e-6);
}

TEST_CASE("threshold mock rejects out-of-vocabulary targets") {
    ThresholdMock mock("m", "go", 0.3);
    CHECK_THROWS_AS(mock.adversarial_loss(window_clip(0.2), "go-go"), Error);
}

TEST_CASE("validate_on_all requires every member to match") {
    auto yes1 = ThresholdMock::always_accept("a", "play music");
    auto yes2 = ThresholdMock::always_accept("b", "Play  Music");  // normalization only
    auto no = ThresholdMock::always_reject("c");
    AudioClip clip = window_clip(0.2);

    SurrogateEnsemble all_yes({yes1, yes2}, 1);
    CHECK(validate_on_all(all_yes, clip, "play music"));
    CHECK(validate_on_all(all_yes, clip, "PLAY MUSIC"));  // case disregarded

    SurrogateEnsemble mixed({yes1, yes2, no}, 1);
    CHECK_FALSE(validate_on_all(mixed, clip, "play music"));
}

TEST_CASE("ensemble shuffle is seeded, reproducible, and multiset-preserving") {
    auto a = ThresholdMock::always_accept("a", "x");
    auto b = ThresholdMock::always_accept("b", "x");
    auto c = ThresholdMock::always_accept("c", "x");

    SurrogateEnsemble e1({a, b, c}, 42);
    SurrogateEnsemble e2({a, b, c}, 42);
    for (int i = 0; i < 20; ++i) {
        e1.shuffle();
        e2.shuffle();
        for (size_t j = 0; j < 3; ++j) CHECK(e1.member(j).id() == e2.member(j).id());
    }

    SurrogateEnsemble single({a}, 9);
    single.shuffle();
    CHECK(single.member(0).id() == "a");
}

TEST_CASE("shuffle visits all permutations uniformly") {
    auto a = ThresholdMock::always_accept("a", "x");
    auto b = ThresholdMock::always_accept("b", "x");
    auto c = ThresholdMock::always_accept("c", "x");
    SurrogateEnsemble ensemble({a, b, c}, 1234);

    std::map<std::string, int> counts;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        ensemble.shuffle();
        std::string key;
        for (size_t j = 0; j < 3; ++j) key += ensemble.member(j).id();
        counts[key]++;
    }
    CHECK(counts.size() == 6);
    for (const auto& [key, count] : counts) {
        double freq = static_cast<double>(count) / trials;
        CHECK(std::fabs(freq - 1.0 / 6.0) < 0.02);
    }
}

TEST_CASE("ensemble rejects duplicate ids") {
    auto a1 = ThresholdMock::always_accept("a", "x");
    auto a2 = ThresholdMock::always_accept("a", "y");
    CHECK_THROWS_AS(SurrogateEnsemble({a1, a2}, 1), Error);
}

TEST_CASE("transcribe is invariant under ensemble shuffles") {
    auto a = std::make_shared<ThresholdMock>("a", "hi", 0.15, 0, 500);
    auto b = std::make_shared<ThresholdMock>("b", "hi", 0.25, 100, 800);
    SurrogateEnsemble ensemble({a, b}, 5);
    AudioClip clip = window_clip(0.2);

    std::map<std::string, std::string> before;
    for (const auto& m : ensemble.members()) before[m->id()] = m->transcribe(clip);
    for (int i = 0; i < 5; ++i) ensemble.shuffle();
    for (const auto& m : ensemble.members()) CHECK(before[m->id()] == m->transcribe(clip));
}

TEST_CASE("mock passes the adapter conformance suite") {
    ThresholdMock mock("m", "play music", 0.25, 100, 900);
    AudioClip probe = testutil::noise_clip(1200, 5, 0.2);
    ConformanceReport report = run_conformance(mock, probe, "play music");
    for (const auto& failure : report.failures) MESSAGE(failure);
    CHECK(report.ok);
}

TEST_CASE("random-weight toy ctc passes the conformance suite") {
    ToyCtcConfig config;
    ToyCtcModel model("probe", config, 99);
    AudioClip probe = testutil::noise_clip(4000, 13, 0.2);
    ConformanceReport report = run_conformance(model, probe, "hello there");
    for (const auto& failure : report.failures) MESSAGE(failure);
    CHECK(report.ok);
}

TEST_CASE("toy ctc rejects wrong sample rates and short clips") {
    ToyCtcModel model("probe", ToyCtcConfig{}, 1);
    AudioClip wrong_rate = testutil::noise_clip(4000, 2, 0.2, 8000);
    CHECK_THROWS_AS(model.transcribe(wrong_rate), Error);
    AudioClip tiny = testutil::noise_clip(100, 2, 0.2);
    CHECK_THROWS_AS(model.transcribe(tiny), Error);
}

TEST_CASE("toy ctc sample gradient matches finite differences") {
    ToyCtcConfig config;
    ToyCtcModel model("probe", config, 4242);
    AudioClip clip = testutil::noise_clip(2400, 31, 0.2);
    const std::string target = "ab";

    std::vector<double> grad = model.loss_gradient(clip, target);
    REQUIRE(grad.size() == clip.samples.size());
    auto f = [&](const std::vector<double>& samples) {
        return model.adversarial_loss(AudioClip{samples, 16000}, target);
    };
    auto coords = testutil::pick_coords(clip.samples.size(), 64, 7);
    CHECK(testutil::fd_relative_error(f, clip.samples, grad, coords, 1e-6) < 1e-3);
}
