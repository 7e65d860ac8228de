#include "siren/resample.hpp"

#include <algorithm>
#include <cmath>

namespace siren {

namespace {

double sinc(double x) {
    if (std::fabs(x) < 1e-12) return 1.0;
    double px = M_PI * x;
    return std::sin(px) / px;
}

// Blackman window on [-1, 1].
double blackman(double v) {
    if (std::fabs(v) > 1.0) return 0.0;
    return 0.42 + 0.5 * std::cos(M_PI * v) + 0.08 * std::cos(2.0 * M_PI * v);
}

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
    check_audio(clip, "resample");
    if (target_rate <= 0) fail(ErrorCode::InvalidRate, "resample: target rate must be positive");
    if (target_rate == clip.sample_rate) return clip;

    const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
    // Cutoff slightly under the smaller Nyquist, expressed in source-sample units.
    const double cutoff = 0.95 * std::min(1.0, ratio);
    const int half_width = static_cast<int>(std::ceil(32.0 / cutoff));

    const auto& in = clip.samples;
    const auto n_in = static_cast<long long>(in.size());
    size_t n_out = static_cast<size_t>(std::llround(static_cast<double>(in.size()) * ratio));
    n_out = std::max<size_t>(n_out, 1);

    AudioClip out;
    out.sample_rate = target_rate;
    out.samples.resize(n_out);

    for (size_t n = 0; n < n_out; ++n) {
        const double center = static_cast<double>(n) / ratio;
        const long long lo = std::max<long long>(0, static_cast<long long>(std::ceil(center)) - half_width);
        const long long hi = std::min<long long>(n_in - 1, static_cast<long long>(std::floor(center)) + half_width);
        double acc = 0.0;
        double wsum = 0.0;
        for (long long m = lo; m <= hi; ++m) {
            const double u = center - static_cast<double>(m);
            const double w = cutoff * sinc(cutoff * u) * blackman(u / half_width);
            acc += w * in[static_cast<size_t>(m)];
            wsum += w;
        }
        // Normalizing by the realized kernel sum flattens passband gain and
        // compensates the truncated kernel at the clip edges.
        out.samples[n] = wsum != 0.0 ? acc / wsum : 0.0;
    }
    return out;
}

}  // namespace siren
