#pragma once

#include "siren/audio.hpp"

namespace siren {

// Band-limited sample rate conversion with a Blackman-windowed sinc kernel.
// Same target rate returns the input unchanged. Output length is
// round(n * target / source), so duration is preserved to within one sample
// period.
AudioClip resample(const AudioClip& clip, int target_rate);

}  // namespace siren
