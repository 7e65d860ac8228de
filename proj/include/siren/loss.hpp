#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "siren/audio.hpp"
#include "siren/dsp.hpp"
#include "siren/surrogate.hpp"

namespace siren {

struct LossWeights {
    double c1 = 0.05;  // imperceptibility weight
    double c2 = 0.01;  // acoustic feature weight

    void validate() const;
};

// total = adversarial + c1 * imperceptibility + c2 * acoustic_feature
struct LossBreakdown {
    double total = 0.0;
    double adversarial = 0.0;
    double imperceptibility = 0.0;
    double acoustic_feature = 0.0;
};

// L2 norm of the element-wise ratio delta / carrier. Denominators are
// stabilized as sign(x) * max(|x|, 1e-4): near-silent carrier samples
// penalize heavily but stay finite, consistent with the |x|-proportional
// clipping budget.
inline constexpr double kRatioDenominatorFloor = 1e-4;

double imperceptibility_loss(const std::vector<double>& carrier, const std::vector<double>& delta);
std::vector<double> imperceptibility_loss_gradient(const std::vector<double>& carrier,
                                                   const std::vector<double>& delta);

// Frobenius distance between the MFCC features of carrier + delta and of the
// command audio. Both signals must produce the same frame count (the caller
// zero-pads the command to carrier length at the injection position).
double acoustic_feature_loss(const AudioClip& carrier, const std::vector<double>& delta,
                             const AudioClip& command_audio, const MfccConfig& config);
std::vector<double> acoustic_feature_loss_gradient(const AudioClip& carrier,
                                                   const std::vector<double>& delta,
                                                   const AudioClip& command_audio,
                                                   const MfccConfig& config);

// Bundles the pieces that stay fixed across optimizer steps: carrier, target,
// weights, and the precomputed command features for the acoustic term.
class CompositeLoss {
public:
    // command_padded must already be carrier-length (zero-padded at the
    // injection position); pass nullopt when c2 == 0.
    CompositeLoss(AudioClip carrier, std::string target, LossWeights weights, MfccConfig mfcc,
                  std::optional<AudioClip> command_padded);

    LossBreakdown evaluate(const SurrogateModel& model, const std::vector<double>& delta) const;
    // Same delta against several models: the model-independent terms are
    // computed once.
    std::vector<LossBreakdown> evaluate_all(
        const std::vector<std::shared_ptr<SurrogateModel>>& models,
        const std::vector<double>& delta) const;
    std::vector<double> gradient(const SurrogateModel& model,
                                 const std::vector<double>& delta) const;
    // Adversarial term only (the composite-vs-bare ablation of the inner
    // update direction).
    std::vector<double> adversarial_gradient(const SurrogateModel& model,
                                             const std::vector<double>& delta) const;

    const AudioClip& carrier() const { return carrier_; }
    const std::string& target() const { return target_; }
    const LossWeights& weights() const { return weights_; }

private:
    AudioClip adversarial_example(const std::vector<double>& delta) const;

    AudioClip carrier_;
    std::string target_;
    LossWeights weights_;
    MfccConfig mfcc_config_;
    std::optional<AudioClip> command_padded_;
    std::unique_ptr<MfccTransform> mfcc_;
    Matrix command_features_;
};

// One-shot forms of the composite loss.
LossBreakdown total_loss(const AudioClip& carrier, const std::vector<double>& delta,
                         const std::string& target, const SurrogateModel& model,
                         const LossWeights& weights, const MfccConfig& mfcc_config,
                         const std::optional<AudioClip>& command_padded);
std::vector<double> total_loss_gradient(const AudioClip& carrier, const std::vector<double>& delta,
                                        const std::string& target, const SurrogateModel& model,
                                        const LossWeights& weights, const MfccConfig& mfcc_config,
                                        const std::optional<AudioClip>& command_padded);

}  // namespace siren
