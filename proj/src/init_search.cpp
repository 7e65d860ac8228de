#include "siren/init_search.hpp"

#include <cmath>

#include "siren/text.hpp"

namespace siren {

void InitConfig::validate() const {
    if (!(stride > 0.0) || !std::isfinite(stride))
        fail(ErrorCode::InvalidConfig, "init stride must be positive");
    if (!(mu_max >= stride)) fail(ErrorCode::InvalidConfig, "mu_max must be >= stride");
    if (position_stride < 1) fail(ErrorCode::InvalidConfig, "position stride must be >= 1");
}

std::vector<double> pad_command(const std::vector<double>& command, size_t carrier_len,
                                size_t position) {
    if (command.empty()) fail(ErrorCode::InvalidArgument, "pad_command: empty command");
    if (command.size() > carrier_len || position > carrier_len - command.size())
        fail(ErrorCode::PositionOutOfRange, "pad_command: command does not fit at position " +
                                                std::to_string(position));
    std::vector<double> out(carrier_len, 0.0);
    std::copy(command.begin(), command.end(), out.begin() + static_cast<long>(position));
    return out;
}

Perturbation ada_search(const AudioClip& carrier, const std::string& target,
                        const AudioClip& command_audio, const SurrogateEnsemble& ensemble,
                        const InitConfig& config) {
    config.validate();
    check_audio(carrier, "ada_search carrier");
    check_audio(command_audio, "ada_search command audio");
    if (carrier.sample_rate != command_audio.sample_rate)
        fail(ErrorCode::InvalidRate, "ada_search: sample rates differ");
    if (command_audio.samples.size() > carrier.samples.size())
        fail(ErrorCode::InvalidArgument, "ada_search: command longer than carrier");
    if (!is_normalized(carrier) || !is_normalized(command_audio))
        fail(ErrorCode::InvalidArgument, "ada_search: inputs must be peak-normalized to 0.5");

    const size_t l_x = carrier.samples.size();
    const size_t l_t = command_audio.samples.size();
    const size_t last_position = l_x - l_t;
    // Scales enumerated as k * stride (not accumulated) so results are
    // bit-reproducible against grid enumeration.
    const long k_max = static_cast<long>(std::floor(config.mu_max / config.stride + 1e-9));
    if (k_max < 1) fail(ErrorCode::InvalidConfig, "mu_max admits no scale step");

    long best_k = k_max + 1;
    size_t best_position = 0;

    AudioClip candidate;
    candidate.sample_rate = carrier.sample_rate;
    candidate.samples.resize(l_x);

    for (size_t pos = 0;; pos += config.position_stride) {
        if (pos > last_position) break;
        for (long k = 1; k <= k_max && k <= best_k; ++k) {
            // Equal scale at a later position loses the tie-break, but the
            // scan still tests it to follow the per-position loop shape.
            double mu = static_cast<double>(k) * config.stride;
            candidate.samples = carrier.samples;
            for (size_t i = 0; i < l_t; ++i)
                candidate.samples[pos + i] += mu * command_audio.samples[i];
            if (validate_on_all(ensemble, candidate, target)) {
                if (k < best_k) {
                    best_k = k;
                    best_position = pos;
                }
                break;
            }
        }
        if (pos == last_position) break;  // guard size_t overflow on +=
    }

    if (best_k > k_max)
        fail(ErrorCode::NoFeasibleInit,
             "ada_search: no placement/scale within mu_max is accepted by all surrogates");

    double mu_star = static_cast<double>(best_k) * config.stride;
    Perturbation out;
    out.stage = PerturbStage::Init;
    out.meta = InitMeta{best_position, mu_star};
    out.delta = pad_command(command_audio.samples, l_x, best_position);
    for (double& d : out.delta) d *= mu_star;

    // Accepted by construction; re-checked so a broken mock surfaces here.
    AudioClip check;
    check.sample_rate = carrier.sample_rate;
    check.samples = carrier.samples;
    for (size_t i = 0; i < l_x; ++i) check.samples[i] += out.delta[i];
    if (!validate_on_all(ensemble, check, target))
        fail(ErrorCode::NoFeasibleInit, "ada_search: selected candidate failed re-validation");
    return out;
}

}  // namespace siren
