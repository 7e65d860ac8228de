#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "siren/audio.hpp"

namespace siren {

// The ten instruction texts the synthetic corpus covers.
const std::vector<std::string>& standard_commands();

// Deterministic spoken-command stand-in: each character renders as a short
// two-tone chord segment with a seeded micro-chirp, plus a little noise.
// Distinct texts give clearly distinct mel trajectories, which is what the
// toy recognizers memorize.
AudioClip synth_command_audio(const std::string& text, uint64_t seed, int sample_rate = 16000);

// Carrier stand-in for a song: a low-register note sequence over a soft
// noise bed, with no near-silent stretches.
AudioClip synth_carrier(uint64_t seed, double seconds, int sample_rate = 16000);

struct CorpusIndex {
    std::filesystem::path dir;
    std::vector<std::pair<std::string, std::filesystem::path>> commands;  // text -> wav
    std::vector<std::filesystem::path> carriers;
};

// Writes the ten command WAVs, two carrier WAVs, and labels.json. Output is
// byte-identical for the same seed.
CorpusIndex make_corpus(const std::filesystem::path& out_dir, uint64_t seed);

CorpusIndex load_corpus(const std::filesystem::path& dir);

}  // namespace siren
