#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "siren/audio.hpp"
#include "siren/wav_io.hpp"
#include "helpers.hpp"

using namespace siren;

TEST_CASE("normalize scales by max absolute value") {
    AudioClip clip{{0.25, -0.25}, 16000};
    AudioClip out = normalize(clip);
    CHECK(out.samples[0] == doctest::Approx(0.5));
    CHECK(out.samples[1] == doctest::Approx(-0.5));

    AudioClip at_bound{{0.5, 0.1}, 16000};
    AudioClip same = normalize(at_bound);
    CHECK(same.samples[0] == 0.5);
    CHECK(same.samples[1] == 0.1);

    AudioClip wide{{2.0, -1.0, 0.0}, 16000};
    AudioClip scaled = normalize(wide);
    CHECK(scaled.samples[0] == 0.5);
    CHECK(scaled.samples[1] == -0.25);
    CHECK(scaled.samples[2] == 0.0);
    CHECK(scaled.sample_rate == 16000);
}

TEST_CASE("normalize is exactly idempotent") {
    AudioClip clip = testutil::noise_clip(512, 7);
    AudioClip once = normalize(clip);
    AudioClip twice = normalize(once);
    REQUIRE(once.samples.size() == twice.samples.size());
    for (size_t i = 0; i < once.samples.size(); ++i) CHECK(once.samples[i] == twice.samples[i]);
}

TEST_CASE("normalize rejects all-zero input") {
    AudioClip zeros{std::vector<double>(16, 0.0), 16000};
    CHECK_THROWS_WITH_AS(normalize(zeros), doctest::Contains("all-zero"), Error);
}

TEST_CASE("snr_db follows the power-ratio formula") {
    AudioClip x{{10.0}, 16000};
    CHECK(snr_db(x, {1.0}) == doctest::Approx(20.0).epsilon(1e-12));

    AudioClip x2{{0.3, 0.4}, 16000};
    CHECK(snr_db(x2, {0.3, 0.4}) == doctest::Approx(0.0));
    CHECK(snr_db(x2, {0.03, 0.04}) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("snr_db sentinel and errors") {
    AudioClip x{{0.1, 0.2}, 16000};
    CHECK(snr_db(x, {0.0, 0.0}) == std::numeric_limits<double>::infinity());

    AudioClip zero{{0.0, 0.0}, 16000};
    CHECK_THROWS_AS(snr_db(zero, {0.1, 0.1}), Error);
    CHECK_THROWS_AS(snr_db(x, {0.1}), Error);  // hard error, no implicit padding
}

TEST_CASE("snr_db scaling identity") {
    AudioClip x = testutil::noise_clip(1000, 3);
    std::vector<double> delta = testutil::noise_clip(1000, 4, 0.01).samples;
    double base = snr_db(x, delta);
    for (double k : {0.5, 2.0, 7.0}) {
        std::vector<double> scaled = delta;
        for (double& v : scaled) v *= k;
        double got = snr_db(x, scaled);
        double want = base - 20.0 * std::log10(k);
        CHECK(std::fabs(got - want) / std::fabs(want) < 1e-9);
    }
}

TEST_CASE("wav round trip at 16-bit resolution") {
    AudioClip clip = testutil::sine(440.0, 0.05, 16000, 0.8);
    auto path = std::filesystem::temp_directory_path() / "siren_test_roundtrip.wav";
    write_wav(path, clip);
    AudioClip back = read_wav(path);
    REQUIRE(back.samples.size() == clip.samples.size());
    CHECK(back.sample_rate == clip.sample_rate);
    for (size_t i = 0; i < clip.samples.size(); ++i)
        CHECK(std::fabs(back.samples[i] - clip.samples[i]) <= 0.5 / 32767.0 + 1e-12);

    // In-memory quantization matches a disk round trip bit for bit.
    std::vector<double> q = quantize_pcm16(clip.samples);
    for (size_t i = 0; i < q.size(); ++i) CHECK(q[i] == back.samples[i]);
    std::filesystem::remove(path);
}

TEST_CASE("wav write clips out-of-range samples") {
    AudioClip clip{{1.5, -2.0, 0.25}, 16000};
    auto path = std::filesystem::temp_directory_path() / "siren_test_clip.wav";
    write_wav(path, clip);
    AudioClip back = read_wav(path);
    CHECK(back.samples[0] == doctest::Approx(1.0));
    CHECK(back.samples[1] == doctest::Approx(-1.0));
    CHECK(back.samples[2] == doctest::Approx(0.25).epsilon(1e-4));
    std::filesystem::remove(path);
}
