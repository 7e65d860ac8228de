#pragma once

#include <optional>
#include <string>
#include <vector>

#include "siren/audio.hpp"
#include "siren/init_search.hpp"
#include "siren/loss.hpp"
#include "siren/rng.hpp"
#include "siren/surrogate.hpp"

namespace siren {

struct AttackConfig {
    double alpha = 0.001;     // learning rate
    double epsilon = 0.05;    // clip ratio: |delta_i| <= epsilon * |x_i|
    double eta = 0.3;         // outer update balance, in [0, 1]
    double sigma_std = 0.001; // exploration noise std (sample scale)
    int max_steps = 1000;
    LossWeights weights;
    InitConfig init;
    MfccConfig mfcc;
    uint64_t seed = 0;
    // Ablations / switches, all off by default.
    bool fresh_noise_per_delta = false;   // new noise per gradient term instead of per (step, j)
    bool adversarial_only_update = false; // bare recognizer loss as the update direction
    bool stop_after_first_valid = false;

    void validate() const;
};

struct ValidExample {
    AudioClip audio;            // carrier + delta, pre-quantization
    std::vector<double> delta;
    int step = 0;               // 1-based outer step that produced it
    double snr_db = 0.0;
    // Still accepted by every surrogate after 16-bit quantization. Failing
    // entries are flagged, not dropped.
    bool valid_after_quantization = false;
};

struct StepLossRecord {
    std::string model_id;
    LossBreakdown loss;
};

struct StepTrace {
    int step = 0;
    std::vector<StepLossRecord> losses;  // at the step's final delta
    bool valid = false;
};

struct AttackResult {
    std::vector<ValidExample> valid_set;
    std::vector<StepTrace> trace;
    Perturbation final_delta;
    InitMeta init;
    std::string target;
};

// Element-wise max(min(delta, eps*|x|), -eps*|x|).
std::vector<double> clip_to_carrier(const std::vector<double>& delta,
                                    const std::vector<double>& carrier, double epsilon);

// eta * mean(deltas) + (1 - eta) * delta0.
std::vector<double> outer_update(const std::vector<std::vector<double>>& deltas,
                                 const std::vector<double>& delta0, double eta);

// The two-loop optimizer: each outer step shuffles the ensemble, walks it in
// order accumulating gradients over all perturbations produced earlier in
// the pass, then blends the per-model results back into delta and validates.
class SeqEnsembleOptimizer {
public:
    // command_padded: the command audio zero-padded to carrier length at the
    // injection position (needed when weights.c2 > 0).
    SeqEnsembleOptimizer(AudioClip carrier, std::string target,
                         std::optional<AudioClip> command_padded, const AttackConfig& config);

    // One recognizer update: gradients of the step loss at every delta in
    // `deltas` (each offset by this step's noise draw), averaged, applied
    // from deltas[0], then clipped. `j` is the 1-based position in the pass;
    // deltas must hold exactly j entries.
    std::vector<double> inner_step(size_t j, const SurrogateModel& model,
                                   const std::vector<std::vector<double>>& deltas);

    AttackResult run(SurrogateEnsemble& ensemble, const Perturbation& initial);

    const CompositeLoss& loss() const { return loss_; }

private:
    AudioClip carrier_;
    std::string target_;
    AttackConfig config_;
    CompositeLoss loss_;
    SeededRng noise_rng_;
};

// Initialize via the placement/scale search, then optimize. Deterministic
// for a fixed config seed and ensemble seed.
AttackResult run_attack(const AudioClip& carrier, const std::string& target,
                        const AudioClip& command_audio, SurrogateEnsemble& ensemble,
                        const AttackConfig& config);

}  // namespace siren
