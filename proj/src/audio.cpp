#include "siren/audio.hpp"

#include <cmath>
#include <limits>

namespace siren {

void check_audio(const AudioClip& clip, const std::string& context) {
    if (clip.samples.empty()) fail(ErrorCode::InvalidArgument, context + ": empty sample sequence");
    if (clip.sample_rate <= 0) fail(ErrorCode::InvalidRate, context + ": non-positive sample rate");
    for (double s : clip.samples) {
        if (!std::isfinite(s)) fail(ErrorCode::InvalidArgument, context + ": non-finite sample");
    }
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double s : v) m = std::max(m, std::fabs(s));
    return m;
}

AudioClip normalize(const AudioClip& clip) {
    check_audio(clip, "normalize");
    double peak = max_abs(clip.samples);
    if (peak == 0.0) fail(ErrorCode::DegenerateAudio, "normalize: all-zero signal");
    double scale = 0.5 / peak;
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.samples.reserve(clip.samples.size());
    for (double s : clip.samples) out.samples.push_back(s * scale);
    return out;
}

bool is_normalized(const AudioClip& clip) {
    double peak = max_abs(clip.samples);
    return peak > 0.0 && peak <= 0.5 + 1e-12;
}

double snr_db(const AudioClip& carrier, const std::vector<double>& delta) {
    check_audio(carrier, "snr_db carrier");
    if (carrier.samples.size() != delta.size())
        fail(ErrorCode::LengthMismatch, "snr_db: carrier and delta lengths differ");
    double px = 0.0, pd = 0.0;
    for (size_t i = 0; i < delta.size(); ++i) {
        px += carrier.samples[i] * carrier.samples[i];
        pd += delta[i] * delta[i];
    }
    if (px == 0.0) fail(ErrorCode::DegenerateAudio, "snr_db: all-zero carrier");
    if (pd == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(px / pd);
}

}  // namespace siren
