#include "siren/dsp.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace siren {

namespace fftutil {

namespace {

// FFTW planning is not thread-safe; execution on new arrays is. Plans are
// created once per size with FFTW_UNALIGNED so they run on plain vectors.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan forward(size_t n) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = fwd_.find(n);
        if (it != fwd_.end()) return it->second;
        std::vector<double> in(n);
        std::vector<fftw_complex> out(n / 2 + 1);
        fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(),
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
        fwd_[n] = p;
        return p;
    }

    fftw_plan backward(size_t n) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = bwd_.find(n);
        if (it != bwd_.end()) return it->second;
        std::vector<fftw_complex> in(n / 2 + 1);
        std::vector<double> out(n);
        fftw_plan p = fftw_plan_dft_c2r_1d(static_cast<int>(n), in.data(), out.data(),
                                           FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_[n] = p;
        return p;
    }

private:
    std::mutex mutex_;
    std::map<size_t, fftw_plan> fwd_;
    std::map<size_t, fftw_plan> bwd_;
};

}  // namespace

void rfft(const std::vector<double>& in, std::vector<std::complex<double>>& out) {
    size_t n = in.size();
    out.resize(n / 2 + 1);
    fftw_plan plan = PlanCache::instance().forward(n);
    fftw_execute_dft_r2c(plan, const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
}

void rfft_adjoint(std::vector<std::complex<double>> grad, size_t n, std::vector<double>& out) {
    // The c2r transform assumes Hermitian symmetry, which doubles every
    // interior bin; halve them so the sum runs over one-sided bins only.
    // Bins 0 and n/2 (even n) are real outputs of the forward transform, so
    // any imaginary gradient there has no preimage and is dropped.
    size_t n_bins = n / 2 + 1;
    grad.resize(n_bins);
    grad[0] = std::complex<double>(grad[0].real(), 0.0);
    bool has_nyquist = (n % 2 == 0);
    if (has_nyquist) grad[n_bins - 1] = std::complex<double>(grad[n_bins - 1].real(), 0.0);
    size_t interior_end = has_nyquist ? n_bins - 1 : n_bins;
    for (size_t k = 1; k < interior_end; ++k) grad[k] *= 0.5;

    out.resize(n);
    fftw_plan plan = PlanCache::instance().backward(n);
    fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(grad.data()), out.data());
}

}  // namespace fftutil

namespace {

std::vector<double> hann_window(int frame_length) {
    std::vector<double> w(frame_length);
    for (int i = 0; i < frame_length; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / frame_length);
    return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters with unit peaks, band edges placed on the continuous
// frequency axis (no bin snapping).
Matrix mel_filterbank(int n_mels, size_t n_bins, int frame_length, int sample_rate) {
    Matrix weights(n_mels, n_bins, 0.0);
    double mel_lo = hz_to_mel(0.0);
    double mel_hi = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(n_mels + 2);
    for (int m = 0; m < n_mels + 2; ++m)
        edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (n_mels + 1));

    for (int m = 0; m < n_mels; ++m) {
        double f_lo = edges[m], f_cen = edges[m + 1], f_hi = edges[m + 2];
        for (size_t k = 0; k < n_bins; ++k) {
            double f = static_cast<double>(k) * sample_rate / frame_length;
            double up = (f - f_lo) / (f_cen - f_lo);
            double down = (f_hi - f) / (f_hi - f_cen);
            weights.at(m, k) = std::max(0.0, std::min(up, down));
        }
    }
    return weights;
}

Matrix dct2_orthonormal(int n_coeffs, int n_mels) {
    Matrix d(n_coeffs, n_mels);
    double norm0 = std::sqrt(1.0 / n_mels);
    double norm = std::sqrt(2.0 / n_mels);
    for (int j = 0; j < n_coeffs; ++j) {
        for (int m = 0; m < n_mels; ++m) {
            double c = std::cos(M_PI * j * (2.0 * m + 1.0) / (2.0 * n_mels));
            d.at(j, m) = (j == 0 ? norm0 : norm) * c;
        }
    }
    return d;
}

void check_frame_params(int frame_length, int hop_length) {
    if (hop_length < 1 || frame_length < hop_length)
        fail(ErrorCode::InvalidArgument, "require frame_length >= hop_length >= 1");
}

}  // namespace

size_t stft_frame_count(size_t num_samples, int frame_length, int hop_length) {
    check_frame_params(frame_length, hop_length);
    if (num_samples < static_cast<size_t>(frame_length))
        fail(ErrorCode::AudioTooShort, "signal shorter than one frame");
    return 1 + (num_samples - frame_length) / hop_length;
}

Spectrogram stft(const AudioClip& clip, int frame_length, int hop_length) {
    check_audio(clip, "stft");
    size_t t_frames = stft_frame_count(clip.samples.size(), frame_length, hop_length);
    size_t n_bins = static_cast<size_t>(frame_length) / 2 + 1;
    std::vector<double> window = hann_window(frame_length);

    Spectrogram spec;
    spec.frame_length = frame_length;
    spec.hop_length = hop_length;
    spec.frames = Matrix(t_frames, n_bins);

    std::vector<double> frame(frame_length);
    std::vector<std::complex<double>> bins;
    for (size_t t = 0; t < t_frames; ++t) {
        size_t offset = t * hop_length;
        for (int i = 0; i < frame_length; ++i) frame[i] = clip.samples[offset + i] * window[i];
        fftutil::rfft(frame, bins);
        for (size_t k = 0; k < n_bins; ++k) spec.frames.at(t, k) = std::abs(bins[k]);
    }
    return spec;
}

MelFrontEnd::MelFrontEnd(int frame_length, int hop_length, int n_mels, int sample_rate,
                         double log_floor, bool pre_emphasis, double pre_emphasis_coeff)
    : frame_length_(frame_length),
      hop_length_(hop_length),
      n_mels_(n_mels),
      sample_rate_(sample_rate),
      log_floor_(log_floor),
      pre_emphasis_(pre_emphasis),
      pre_emphasis_coeff_(pre_emphasis_coeff),
      n_bins_(static_cast<size_t>(frame_length) / 2 + 1),
      window_(hann_window(frame_length)),
      mel_weights_(mel_filterbank(n_mels, n_bins_, frame_length, sample_rate)) {
    check_frame_params(frame_length, hop_length);
    if (n_mels < 1) fail(ErrorCode::InvalidConfig, "n_mels must be >= 1");
    if (sample_rate <= 0) fail(ErrorCode::InvalidRate, "sample rate must be positive");
    if (log_floor <= 0.0) fail(ErrorCode::InvalidConfig, "log floor must be positive");

    mel_begin_.resize(n_mels_);
    mel_end_.resize(n_mels_);
    for (int m = 0; m < n_mels_; ++m) {
        const double* w = mel_weights_.row(m);
        size_t lo = 0;
        while (lo < n_bins_ && w[lo] == 0.0) ++lo;
        size_t hi = n_bins_;
        while (hi > lo && w[hi - 1] == 0.0) --hi;
        mel_begin_[m] = lo;
        mel_end_[m] = hi;
    }
}

size_t MelFrontEnd::frame_count(size_t num_samples) const {
    return stft_frame_count(num_samples, frame_length_, hop_length_);
}

std::vector<double> MelFrontEnd::preprocess(const AudioClip& clip) const {
    if (!pre_emphasis_) return clip.samples;
    std::vector<double> y(clip.samples.size());
    y[0] = clip.samples[0];
    for (size_t i = 1; i < clip.samples.size(); ++i)
        y[i] = clip.samples[i] - pre_emphasis_coeff_ * clip.samples[i - 1];
    return y;
}

Matrix MelFrontEnd::log_mel(const AudioClip& clip) const {
    check_audio(clip, "log_mel");
    size_t t_frames = frame_count(clip.samples.size());
    std::vector<double> signal = preprocess(clip);

    Matrix out(t_frames, n_mels_);
    std::vector<double> frame(frame_length_);
    std::vector<double> mags(n_bins_);
    std::vector<std::complex<double>> bins;
    for (size_t t = 0; t < t_frames; ++t) {
        size_t offset = t * hop_length_;
        for (int i = 0; i < frame_length_; ++i) frame[i] = signal[offset + i] * window_[i];
        fftutil::rfft(frame, bins);
        for (size_t k = 0; k < n_bins_; ++k) mags[k] = std::abs(bins[k]);
        for (int m = 0; m < n_mels_; ++m) {
            double acc = 0.0;
            const double* w = mel_weights_.row(m);
            for (size_t k = mel_begin_[m]; k < mel_end_[m]; ++k) acc += w[k] * mags[k];
            out.at(t, m) = std::log(std::max(acc, log_floor_));
        }
    }
    return out;
}

std::vector<double> MelFrontEnd::input_gradient(const AudioClip& clip,
                                                const Matrix& log_mel_grad) const {
    check_audio(clip, "log_mel gradient");
    size_t t_frames = frame_count(clip.samples.size());
    if (log_mel_grad.rows != t_frames || log_mel_grad.cols != static_cast<size_t>(n_mels_))
        fail(ErrorCode::LengthMismatch, "log-mel gradient shape mismatch");
    std::vector<double> signal = preprocess(clip);

    std::vector<double> d_signal(signal.size(), 0.0);
    std::vector<double> frame(frame_length_);
    std::vector<std::complex<double>> bins;
    std::vector<double> mel_energy(n_mels_);
    std::vector<double> d_mag(n_bins_);
    std::vector<std::complex<double>> d_bins(n_bins_);
    std::vector<double> d_frame;

    std::vector<double> mags(n_bins_);
    for (size_t t = 0; t < t_frames; ++t) {
        size_t offset = t * hop_length_;
        for (int i = 0; i < frame_length_; ++i) frame[i] = signal[offset + i] * window_[i];
        fftutil::rfft(frame, bins);
        for (size_t k = 0; k < n_bins_; ++k) mags[k] = std::abs(bins[k]);

        for (int m = 0; m < n_mels_; ++m) {
            double acc = 0.0;
            const double* w = mel_weights_.row(m);
            for (size_t k = mel_begin_[m]; k < mel_end_[m]; ++k) acc += w[k] * mags[k];
            mel_energy[m] = acc;
        }

        // log -> mel energy (zero below the floor, matching max())
        // -> magnitude via filterbank transpose.
        std::fill(d_mag.begin(), d_mag.end(), 0.0);
        for (int m = 0; m < n_mels_; ++m) {
            if (mel_energy[m] <= log_floor_) continue;
            double g = log_mel_grad.at(t, m) / mel_energy[m];
            if (g == 0.0) continue;
            const double* w = mel_weights_.row(m);
            for (size_t k = mel_begin_[m]; k < mel_end_[m]; ++k) d_mag[k] += g * w[k];
        }

        // magnitude -> complex bin (unit phase direction; zero at the origin).
        for (size_t k = 0; k < n_bins_; ++k) {
            double mag = mags[k];
            d_bins[k] = mag > 0.0 ? d_mag[k] / mag * bins[k] : std::complex<double>(0.0, 0.0);
        }

        fftutil::rfft_adjoint(d_bins, static_cast<size_t>(frame_length_), d_frame);
        for (int i = 0; i < frame_length_; ++i) d_signal[offset + i] += d_frame[i] * window_[i];
    }

    if (!pre_emphasis_) return d_signal;
    std::vector<double> d_samples(d_signal.size(), 0.0);
    for (size_t i = 0; i < d_signal.size(); ++i) {
        d_samples[i] += d_signal[i];
        if (i + 1 < d_signal.size()) d_samples[i] -= pre_emphasis_coeff_ * d_signal[i + 1];
    }
    return d_samples;
}

MfccTransform::MfccTransform(const MfccConfig& config, int sample_rate)
    : config_(config),
      front_(config.frame_length, config.hop_length, config.n_mels, sample_rate, config.log_floor,
             config.pre_emphasis, config.pre_emphasis_coeff),
      dct_(dct2_orthonormal(config.n_coeffs, config.n_mels)) {
    if (config.n_coeffs < 1 || config.n_coeffs > config.n_mels)
        fail(ErrorCode::InvalidConfig, "need 1 <= n_coeffs <= n_mels");
}

MfccFeatures MfccTransform::compute(const AudioClip& clip) const {
    Matrix lm = front_.log_mel(clip);
    MfccFeatures out;
    out.config = config_;
    out.coeffs = Matrix(lm.rows, config_.n_coeffs);
    for (size_t t = 0; t < lm.rows; ++t) {
        const double* row = lm.row(t);
        for (int j = 0; j < config_.n_coeffs; ++j) {
            double acc = 0.0;
            const double* d = dct_.row(j);
            for (int m = 0; m < config_.n_mels; ++m) acc += d[m] * row[m];
            out.coeffs.at(t, j) = acc;
        }
    }
    return out;
}

std::vector<double> MfccTransform::input_gradient(const AudioClip& clip,
                                                  const Matrix& coeff_grad) const {
    size_t t_frames = front_.frame_count(clip.samples.size());
    if (coeff_grad.rows != t_frames || coeff_grad.cols != static_cast<size_t>(config_.n_coeffs))
        fail(ErrorCode::LengthMismatch, "coefficient gradient shape mismatch");
    Matrix d_logmel(t_frames, config_.n_mels);
    for (size_t t = 0; t < t_frames; ++t) {
        for (int m = 0; m < config_.n_mels; ++m) {
            double acc = 0.0;
            for (int j = 0; j < config_.n_coeffs; ++j) acc += dct_.at(j, m) * coeff_grad.at(t, j);
            d_logmel.at(t, m) = acc;
        }
    }
    return front_.input_gradient(clip, d_logmel);
}

MfccFeatures mfcc(const AudioClip& clip, const MfccConfig& config) {
    check_audio(clip, "mfcc");
    return MfccTransform(config, clip.sample_rate).compute(clip);
}

}  // namespace siren
