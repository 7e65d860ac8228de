#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "siren/audio.hpp"
#include "siren/rng.hpp"

namespace testutil {

inline siren::AudioClip sine(double freq, double seconds, int rate = 16000, double amp = 1.0) {
    siren::AudioClip clip;
    clip.sample_rate = rate;
    size_t n = static_cast<size_t>(seconds * rate);
    clip.samples.resize(n);
    for (size_t i = 0; i < n; ++i)
        clip.samples[i] = amp * std::sin(2.0 * M_PI * freq * i / rate);
    return clip;
}

inline siren::AudioClip noise_clip(size_t n, uint64_t seed, double std_dev = 0.1,
                                   int rate = 16000) {
    siren::SeededRng rng(seed);
    siren::AudioClip clip;
    clip.sample_rate = rate;
    clip.samples.resize(n);
    for (auto& s : clip.samples) s = std_dev * rng.next_gaussian();
    return clip;
}

// Single-frequency power via a direct Hann-windowed projection; independent
// of the library's FFT path.
inline double tone_power_db(const siren::AudioClip& clip, double freq) {
    double re = 0.0, im = 0.0;
    size_t n = clip.samples.size();
    for (size_t i = 0; i < n; ++i) {
        double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
        double phase = 2.0 * M_PI * freq * i / clip.sample_rate;
        re += w * clip.samples[i] * std::cos(phase);
        im -= w * clip.samples[i] * std::sin(phase);
    }
    return 10.0 * std::log10(re * re + im * im + 1e-300);
}

// Central finite differences of f at a subset of coordinates; returns the
// vector-relative error against the analytic gradient at those coordinates.
inline double fd_relative_error(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& x,
                                const std::vector<double>& analytic,
                                const std::vector<size_t>& coords, double h) {
    double num = 0.0, den = 0.0;
    std::vector<double> probe = x;
    for (size_t i : coords) {
        probe[i] = x[i] + h;
        double up = f(probe);
        probe[i] = x[i] - h;
        double down = f(probe);
        probe[i] = x[i];
        double fd = (up - down) / (2.0 * h);
        num += (analytic[i] - fd) * (analytic[i] - fd);
        den += fd * fd;
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : 1.0;
    return std::sqrt(num / den);
}

inline std::vector<size_t> pick_coords(size_t n, size_t count, uint64_t seed) {
    siren::SeededRng rng(seed);
    std::vector<size_t> coords;
    for (size_t i = 0; i < count; ++i) coords.push_back(rng.next_index(n));
    return coords;
}

}  // namespace testutil
