#pragma once

#include <complex>
#include <vector>

#include "siren/audio.hpp"
#include "siren/matrix.hpp"

namespace siren {

namespace fftutil {

// One-sided DFT of a real frame: out has n/2+1 bins. Plans are cached
// globally behind a mutex; execution is safe to call concurrently.
void rfft(const std::vector<double>& in, std::vector<std::complex<double>>& out);

// Adjoint of rfft restricted to the one-sided bins actually produced:
// out[i] = sum_k Re(grad[k] * exp(+2*pi*i*k*j/n)). Consumes grad as scratch.
void rfft_adjoint(std::vector<std::complex<double>> grad, size_t n, std::vector<double>& out);

}  // namespace fftutil

// T x F magnitude spectrogram. F = frame_length/2 + 1,
// T = 1 + floor((len - frame_length) / hop_length).
struct Spectrogram {
    Matrix frames;
    int frame_length = 0;
    int hop_length = 0;
};

size_t stft_frame_count(size_t num_samples, int frame_length, int hop_length);

// Hann-windowed magnitude STFT. Clips shorter than one frame are an
// AudioTooShort error.
Spectrogram stft(const AudioClip& clip, int frame_length, int hop_length);

struct MfccConfig {
    int frame_length = 400;  // samples (25 ms at 16 kHz)
    int hop_length = 160;    // samples (10 ms at 16 kHz)
    int n_mels = 80;
    int n_coeffs = 13;
    double log_floor = 1e-10;
    bool pre_emphasis = false;
    double pre_emphasis_coeff = 0.97;
};

struct MfccFeatures {
    Matrix coeffs;  // T x n_coeffs
    MfccConfig config;
};

// Shared spectral front half: Hann window -> rfft magnitude -> mel
// filterbank -> log, with the matching input-gradient chain. The filterbank
// spans 0..Nyquist for the sample rate given at construction.
class MelFrontEnd {
public:
    MelFrontEnd(int frame_length, int hop_length, int n_mels, int sample_rate, double log_floor,
                bool pre_emphasis = false, double pre_emphasis_coeff = 0.97);

    // T x n_mels log mel energies.
    Matrix log_mel(const AudioClip& clip) const;

    // d(loss)/d(samples) given d(loss)/d(log-mel), same clip.
    std::vector<double> input_gradient(const AudioClip& clip, const Matrix& log_mel_grad) const;

    size_t frame_count(size_t num_samples) const;
    int frame_length() const { return frame_length_; }
    int hop_length() const { return hop_length_; }
    int n_mels() const { return n_mels_; }
    int sample_rate() const { return sample_rate_; }

private:
    std::vector<double> preprocess(const AudioClip& clip) const;

    int frame_length_;
    int hop_length_;
    int n_mels_;
    int sample_rate_;
    double log_floor_;
    bool pre_emphasis_;
    double pre_emphasis_coeff_;
    size_t n_bins_;
    std::vector<double> window_;
    Matrix mel_weights_;  // n_mels x n_bins
    // triangles touch only a narrow bin range; loops skip the zero tails
    std::vector<size_t> mel_begin_;
    std::vector<size_t> mel_end_;
};

// MFCC = log mel energies -> orthonormal DCT-II, first n_coeffs kept.
// Output shape depends only on input length and config.
class MfccTransform {
public:
    MfccTransform(const MfccConfig& config, int sample_rate);

    MfccFeatures compute(const AudioClip& clip) const;

    // d(loss)/d(samples) given d(loss)/d(coeffs).
    std::vector<double> input_gradient(const AudioClip& clip, const Matrix& coeff_grad) const;

    const MfccConfig& config() const { return config_; }

private:
    MfccConfig config_;
    MelFrontEnd front_;
    Matrix dct_;  // n_coeffs x n_mels
};

MfccFeatures mfcc(const AudioClip& clip, const MfccConfig& config);

}  // namespace siren
