#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "siren/audio.hpp"
#include "siren/surrogate.hpp"

namespace siren {

struct Rational {
    long num = 0;
    long den = 1;

    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / den; }
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

// Success rate of attack: commands with at least one working adversarial
// example over total commands.
Rational sroa(const std::vector<bool>& outcomes);

// Fraction of the valid set transcribed exactly as the target by the model.
double transfer_rate(const std::vector<AudioClip>& valid_set, const SurrogateModel& model,
                     const std::string& target);

// Word-level Levenshtein distance over the reference word count. The
// reference must be non-empty.
double word_error_rate(const std::string& hyp, const std::string& ref);

// Sliding median over a window of h samples on each side. Near the edges the
// radius shrinks symmetrically, so the window always stays odd and centered.
// Mean smoothing is the ablation variant.
AudioClip local_smoothing(const AudioClip& clip, int h, bool use_mean = false);

// Resample down to f_low and back; output length equals the input exactly.
AudioClip downsample_defense(const AudioClip& clip, int f_low);

struct TemporalDependencyResult {
    double score = 0.0;  // 1 - WER(head transcript, prefix of full transcript), clamped to [0, 1]
    bool adversarial = false;
    std::string head_transcript;
    std::string full_transcript;
    std::string prefix_transcript;
};

// Transcribe the first k part of the clip and compare against the first k
// part of the full transcription; low consistency flags the clip.
TemporalDependencyResult temporal_dependency_check(const AudioClip& clip,
                                                   const SurrogateModel& model, double k,
                                                   double threshold = 0.5);

struct MvpEarsResult {
    bool agreement = false;  // all transcripts identical; disagreement means adversarial
    std::vector<std::string> transcripts;
};

MvpEarsResult mvp_ears_check(const AudioClip& clip,
                             const std::vector<std::shared_ptr<SurrogateModel>>& models);

struct DefenseConfig {
    std::vector<int> smoothing_h = {1, 2, 3};
    std::vector<int> downsample_rates = {14000, 12000, 10000};
    std::vector<double> td_ratios = {0.2, 0.5, 0.8};
    double td_threshold = 0.5;
    std::vector<int> mvp_m = {2};
    bool smoothing_use_mean = false;
};

// One attacked command: its target text and the examples produced for it.
struct CommandExamples {
    std::string target;
    std::vector<AudioClip> examples;
};

struct DefenseCell {
    std::string defense;  // "smoothing", "downsample", "td", "mvp"
    std::string setting;  // e.g. "h=2"
    Rational per_command_sroa;
    double per_example_survival = 0.0;  // pooled over all examples
};

struct EvalReport {
    // Undefended check against the given models.
    Rational baseline_sroa;
    double mean_snr_db = 0.0;  // over successful commands only
    std::map<std::string, double> transfer_rates;  // model id -> TR pooled over examples
    std::vector<DefenseCell> defense_table;
};

// Re-validates every example (optionally transformed by a defense) against
// the checker models; an example survives a defense when the transformed
// audio still transcribes exactly as the target on every checker.
EvalReport evaluate_attack(const std::vector<CommandExamples>& commands,
                           const std::vector<std::shared_ptr<SurrogateModel>>& checkers,
                           const std::vector<double>& per_command_best_snr,
                           const DefenseConfig& defenses);

std::string render_defense_table(const EvalReport& report);

}  // namespace siren
