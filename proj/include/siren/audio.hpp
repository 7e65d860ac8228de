#pragma once

#include <string>
#include <vector>

#include "siren/errors.hpp"

namespace siren {

// Mono audio. Samples are unitless real amplitudes: file I/O keeps them in
// [-1, 1]; attack-facing code normalizes carriers and command audio to
// peak 0.5 first.
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 16000;

    size_t size() const { return samples.size(); }
    double duration_seconds() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

// Rejects empty clips, non-finite samples, non-positive rates.
void check_audio(const AudioClip& clip, const std::string& context = "audio");

// Peak-normalize so max |sample| is exactly 0.5. Idempotent. All-zero input
// is a DegenerateAudio error (the scale would be undefined).
AudioClip normalize(const AudioClip& clip);

bool is_normalized(const AudioClip& clip);

double max_abs(const std::vector<double>& v);

// 10*log10(||x||^2 / ||d||^2). All-zero delta returns +infinity (documented
// sentinel); all-zero carrier or length mismatch is an error.
double snr_db(const AudioClip& carrier, const std::vector<double>& delta);

}  // namespace siren
