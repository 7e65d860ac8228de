#pragma once

#include <filesystem>
#include <vector>

#include "siren/audio.hpp"

namespace siren {

// RIFF WAV, PCM 16-bit little-endian, mono. Writes clip samples scaled by
// 32767; out-of-range samples are clipped to [-1, 1] with a warning on
// stderr. Reads scale back by 1/32767.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);
AudioClip read_wav(const std::filesystem::path& path);

// Same 16-bit quantization a WAV write/read round trip applies, in memory.
std::vector<double> quantize_pcm16(const std::vector<double>& samples);

}  // namespace siren
