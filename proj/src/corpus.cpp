#include "siren/corpus.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "siren/rng.hpp"
#include "siren/text.hpp"
#include "siren/wav_io.hpp"

namespace siren {

const std::vector<std::string>& standard_commands() {
    static const std::vector<std::string> commands = {
        "call my wife",       "make it warmer",     "navigate to my home",
        "open the door",      "open the website",   "play music",
        "send a text",        "take a picture",     "turn off the light",
        "turn on airplane mode"};
    return commands;
}

AudioClip synth_command_audio(const std::string& text, uint64_t seed, int sample_rate) {
    std::vector<int> tokens = CharVocab::tokenize(text);
    if (tokens.empty()) fail(ErrorCode::InvalidArgument, "synth_command_audio: empty text");

    SeededRng rng(seed ^ 0xC0FFEEull);
    const int seg = sample_rate * 8 / 100;  // 80 ms per character
    AudioClip clip;
    clip.sample_rate = sample_rate;
    clip.samples.assign(static_cast<size_t>(tokens.size()) * seg, 0.0);

    for (size_t c = 0; c < tokens.size(); ++c) {
        // Tones sit above the carrier register (which stays < 600 Hz).
        double f1 = 500.0 * std::pow(2.0, tokens[c] / 10.0);
        double f2 = f1 * 1.5;
        double chirp = 20.0 * (2.0 * rng.next_unit() - 1.0);  // per-segment micro-chirp
        double phase1 = 2.0 * M_PI * rng.next_unit();
        double phase2 = 2.0 * M_PI * rng.next_unit();
        for (int i = 0; i < seg; ++i) {
            double t = static_cast<double>(i) / sample_rate;
            double env = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 0.5) / seg);
            double v = 0.7 * std::sin(2.0 * M_PI * (f1 + chirp * t) * t + phase1) +
                       0.3 * std::sin(2.0 * M_PI * f2 * t + phase2);
            clip.samples[c * seg + i] = env * v;
        }
    }
    for (double& s : clip.samples) s += 0.01 * rng.next_gaussian();

    double peak = max_abs(clip.samples);
    for (double& s : clip.samples) s *= 0.9 / peak;
    return clip;
}

AudioClip synth_carrier(uint64_t seed, double seconds, int sample_rate) {
    if (seconds <= 0.0) fail(ErrorCode::InvalidArgument, "synth_carrier: non-positive duration");
    SeededRng rng(seed ^ 0x5151ull);
    size_t n = static_cast<size_t>(seconds * sample_rate);
    AudioClip clip;
    clip.sample_rate = sample_rate;
    clip.samples.assign(n, 0.0);

    // Note sequence drawn from a small pentatonic-ish set, quarter notes.
    static const double scale[] = {130.81, 146.83, 164.81, 196.0, 220.0, 261.63, 293.66, 329.63};
    const size_t note_len = static_cast<size_t>(sample_rate / 4);
    double phase = 0.0;
    for (size_t start = 0; start < n; start += note_len) {
        double f = scale[rng.next_index(8)];
        size_t end = std::min(n, start + note_len);
        for (size_t i = start; i < end; ++i) {
            phase += 2.0 * M_PI * f / sample_rate;
            double body = std::sin(phase) + 0.4 * std::sin(2.0 * phase) + 0.2 * std::sin(3.0 * phase);
            clip.samples[i] += 0.5 * body;
        }
    }

    // Soft low-passed noise bed keeps every region audibly non-silent.
    double lp = 0.0;
    for (size_t i = 0; i < n; ++i) {
        lp = 0.9 * lp + 0.1 * rng.next_gaussian();
        clip.samples[i] += 0.35 * lp + 0.02 * rng.next_gaussian();
    }

    double peak = max_abs(clip.samples);
    for (double& s : clip.samples) s *= 0.9 / peak;
    return clip;
}

namespace {

std::string slugify(const std::string& text) {
    std::string slug;
    for (char c : normalize_transcript(text)) slug.push_back(c == ' ' ? '_' : c);
    return slug;
}

}  // namespace

CorpusIndex make_corpus(const std::filesystem::path& out_dir, uint64_t seed) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::filesystem::create_directories(out_dir / "carriers", ec);

    CorpusIndex index;
    index.dir = out_dir;

    nlohmann::json labels = nlohmann::json::array();
    for (const auto& text : standard_commands()) {
        SeededRng stream = SeededRng::substream(seed, "command:" + text);
        AudioClip clip = synth_command_audio(text, stream.next_u64());
        std::filesystem::path wav = out_dir / (slugify(text) + ".wav");
        write_wav(wav, clip);
        labels.push_back({{"text", text}, {"file", wav.filename().string()}});
        index.commands.emplace_back(text, wav);
    }

    for (int i = 0; i < 2; ++i) {
        SeededRng stream = SeededRng::substream(seed, "carrier:" + std::to_string(i));
        AudioClip clip = synth_carrier(stream.next_u64(), 2.5);
        std::filesystem::path wav = out_dir / "carriers" / ("song_" + std::to_string(i) + ".wav");
        write_wav(wav, clip);
        index.carriers.push_back(wav);
    }

    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    manifest["seed"] = seed;
    manifest["sample_rate"] = 16000;
    manifest["commands"] = labels;
    manifest["carriers"] = nlohmann::json::array();
    for (const auto& c : index.carriers)
        manifest["carriers"].push_back("carriers/" + c.filename().string());

    std::ofstream f(out_dir / "labels.json", std::ios::trunc);
    if (!f) fail(ErrorCode::IoError, "cannot write labels.json in " + out_dir.string());
    f << manifest.dump(2) << "\n";
    return index;
}

CorpusIndex load_corpus(const std::filesystem::path& dir) {
    std::ifstream f(dir / "labels.json");
    if (!f) fail(ErrorCode::IoError, "missing labels.json in " + dir.string());
    nlohmann::json manifest;
    try {
        f >> manifest;
    } catch (const std::exception& e) {
        fail(ErrorCode::IoError, "bad labels.json: " + std::string(e.what()));
    }

    CorpusIndex index;
    index.dir = dir;
    for (const auto& entry : manifest.at("commands"))
        index.commands.emplace_back(entry.at("text").get<std::string>(),
                                    dir / entry.at("file").get<std::string>());
    if (manifest.contains("carriers"))
        for (const auto& entry : manifest["carriers"])
            index.carriers.push_back(dir / entry.get<std::string>());
    return index;
}

}  // namespace siren
