#include <doctest.h>

#include <cmath>

#include "siren/dsp.hpp"
#include "helpers.hpp"

using namespace siren;

TEST_CASE("stft shape and zero signal") {
    AudioClip zeros{std::vector<double>(800, 0.0), 16000};
    Spectrogram spec = stft(zeros, 400, 160);
    CHECK(spec.frames.rows == 1 + (800 - 400) / 160);
    CHECK(spec.frames.cols == 201);
    for (double v : spec.frames.data) CHECK(v == 0.0);

    AudioClip one_frame{std::vector<double>(400, 0.1), 16000};
    CHECK(stft(one_frame, 400, 160).frames.rows == 1);

    AudioClip tiny{std::vector<double>(399, 0.1), 16000};
    CHECK_THROWS_AS(stft(tiny, 400, 160), Error);
}

TEST_CASE("stft peak bin matches the tone frequency") {
    // 1 kHz at 16 kHz with a 400-sample frame: bin = 400 * 1000 / 16000 = 25.
    AudioClip tone = testutil::sine(1000.0, 0.2);
    Spectrogram spec = stft(tone, 400, 160);
    for (size_t t = 0; t < spec.frames.rows; ++t) {
        size_t best = 0;
        for (size_t k = 1; k < spec.frames.cols; ++k)
            if (spec.frames.at(t, k) > spec.frames.at(t, best)) best = k;
        CHECK(best == 25);
    }
}

TEST_CASE("stft output shape depends only on length and config") {
    AudioClip a = testutil::noise_clip(1400, 1);
    AudioClip b = testutil::sine(3000.0, 1400.0 / 16000.0);
    b.samples.resize(1400);
    Spectrogram sa = stft(a, 400, 160);
    Spectrogram sb = stft(b, 400, 160);
    CHECK(sa.frames.rows == sb.frames.rows);
    CHECK(sa.frames.cols == sb.frames.cols);
}

TEST_CASE("mfcc is deterministic and finite") {
    MfccConfig config;
    AudioClip clip = testutil::noise_clip(8000, 21);
    MfccFeatures a = mfcc(clip, config);
    MfccFeatures b = mfcc(clip, config);
    REQUIRE(a.coeffs.data.size() == b.coeffs.data.size());
    for (size_t i = 0; i < a.coeffs.data.size(); ++i) CHECK(a.coeffs.data[i] == b.coeffs.data[i]);
    for (double v : a.coeffs.data) CHECK(std::isfinite(v));
    CHECK(a.coeffs.cols == 13);
}

TEST_CASE("input scaling shifts only coefficient zero") {
    MfccConfig config;
    AudioClip clip = testutil::noise_clip(4000, 5, 0.2);
    AudioClip doubled = clip;
    for (double& s : doubled.samples) s *= 2.0;

    MfccFeatures base = mfcc(clip, config);
    MfccFeatures scaled = mfcc(doubled, config);
    REQUIRE(base.coeffs.same_shape(scaled.coeffs));

    // log(2k) - log(k) = log 2 on every mel, so the orthonormal DCT routes
    // the whole shift into coefficient 0 as log(2) * sqrt(n_mels).
    double expected_shift = std::log(2.0) * std::sqrt(static_cast<double>(config.n_mels));
    for (size_t t = 0; t < base.coeffs.rows; ++t) {
        CHECK(scaled.coeffs.at(t, 0) - base.coeffs.at(t, 0) ==
              doctest::Approx(expected_shift).epsilon(1e-9));
        for (int j = 1; j < config.n_coeffs; ++j)
            CHECK(scaled.coeffs.at(t, j) == doctest::Approx(base.coeffs.at(t, j)).epsilon(1e-9));
    }
}

TEST_CASE("identical clips give identical features") {
    MfccConfig config;
    AudioClip clip = testutil::noise_clip(4800, 9);
    MfccFeatures a = mfcc(clip, config);
    MfccFeatures b = mfcc(clip, config);
    double dist = 0.0;
    for (size_t i = 0; i < a.coeffs.data.size(); ++i) {
        double d = a.coeffs.data[i] - b.coeffs.data[i];
        dist += d * d;
    }
    CHECK(dist == 0.0);
}

TEST_CASE("mfcc input gradient matches finite differences") {
    MfccConfig config;
    config.n_mels = 24;
    config.n_coeffs = 8;
    AudioClip clip = testutil::noise_clip(1200, 33, 0.2);
    MfccTransform transform(config, clip.sample_rate);

    // Scalar head: weighted sum of all coefficients.
    Matrix weights(transform.compute(clip).coeffs.rows, config.n_coeffs);
    SeededRng wrng(99);
    for (double& w : weights.data) w = wrng.next_gaussian();

    auto f = [&](const std::vector<double>& samples) {
        AudioClip probe{samples, clip.sample_rate};
        MfccFeatures feats = transform.compute(probe);
        double acc = 0.0;
        for (size_t i = 0; i < feats.coeffs.data.size(); ++i)
            acc += weights.data[i] * feats.coeffs.data[i];
        return acc;
    };

    std::vector<double> grad = transform.input_gradient(clip, weights);
    REQUIRE(grad.size() == clip.samples.size());
    auto coords = testutil::pick_coords(clip.samples.size(), 40, 17);
    double err = testutil::fd_relative_error(f, clip.samples, grad, coords, 1e-6);
    CHECK(err < 1e-6);
}

TEST_CASE("log-mel front end gradient matches finite differences") {
    MelFrontEnd front(256, 128, 20, 16000, 1e-10);
    AudioClip clip = testutil::noise_clip(900, 41, 0.3);

    Matrix lm = front.log_mel(clip);
    Matrix weights(lm.rows, lm.cols);
    SeededRng wrng(7);
    for (double& w : weights.data) w = wrng.next_gaussian();

    auto f = [&](const std::vector<double>& samples) {
        AudioClip probe{samples, clip.sample_rate};
        Matrix m = front.log_mel(probe);
        double acc = 0.0;
        for (size_t i = 0; i < m.data.size(); ++i) acc += weights.data[i] * m.data[i];
        return acc;
    };

    std::vector<double> grad = front.input_gradient(clip, weights);
    auto coords = testutil::pick_coords(clip.samples.size(), 40, 23);
    CHECK(testutil::fd_relative_error(f, clip.samples, grad, coords, 1e-6) < 1e-6);
}
