#pragma once

#include <optional>
#include <vector>

#include "siren/audio.hpp"
#include "siren/surrogate.hpp"

namespace siren {

enum class PerturbStage { Init, Inner, Outer };

struct InitMeta {
    size_t position = 0;  // left zero-padding length, in samples
    double scale = 0.0;   // command scaling factor
};

// Additive sample-aligned delta, same length as the carrier it was built
// for. Init-stage deltas are zero outside [position, position + command_len).
struct Perturbation {
    std::vector<double> delta;
    PerturbStage stage = PerturbStage::Init;
    std::optional<InitMeta> meta;
};

struct InitConfig {
    double stride = 0.05;        // scale grid step
    double mu_max = 1.0;         // scale cap
    size_t position_stride = 160;  // placement grid step, in samples

    void validate() const;
};

// Command samples placed at `position` inside a zero vector of carrier
// length.
std::vector<double> pad_command(const std::vector<double>& command, size_t carrier_len,
                                size_t position);

// Grid search over placement and scale: returns scale * pad(command) for the
// smallest scale accepted by every ensemble member, smallest position
// breaking ties. Scales are k * stride for k = 1, 2, ...; a position is
// abandoned once its scale passes the incumbent best. Both clips must be
// peak-normalized to 0.5. Raises NoFeasibleInit when nothing within mu_max
// is accepted; the all-zero delta is never returned.
Perturbation ada_search(const AudioClip& carrier, const std::string& target,
                        const AudioClip& command_audio, const SurrogateEnsemble& ensemble,
                        const InitConfig& config);

}  // namespace siren
