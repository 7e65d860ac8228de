#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "siren/audio.hpp"
#include "siren/dsp.hpp"
#include "siren/rng.hpp"
#include "siren/surrogate.hpp"

namespace siren {

// Small trainable CTC recognizer: log-mel front end, two 1-D convolutions
// over time with softplus activations, linear head over the character
// vocabulary. Softplus keeps the whole chain smooth, so sample gradients
// check cleanly against finite differences.
struct ToyCtcConfig {
    int sample_rate = 16000;
    int frame_length = 400;
    int hop_length = 160;
    int n_mels = 40;
    double log_floor = 1e-10;
    double feat_shift = -5.0;  // features = (log mel - shift) * scale
    double feat_scale = 0.25;
    int conv1_channels = 32;
    int conv2_channels = 32;
    int kernel = 5;
    int time_stride = 2;  // first conv downsamples time
};

struct ToyTrainStats {
    int epochs = 0;
    double token_error = 1.0;
    double mean_loss = 0.0;
};

class ToyCtcModel : public SurrogateModel {
public:
    ToyCtcModel(std::string id, const ToyCtcConfig& config, uint64_t init_seed);

    static std::shared_ptr<ToyCtcModel> load(const std::filesystem::path& checkpoint);
    void save(const std::filesystem::path& checkpoint) const;

    const std::string& id() const override { return id_; }
    ModelCategory category() const override { return ModelCategory::CnnBased; }
    DecoderKind decoder_kind() const override { return DecoderKind::Ctc; }
    int sample_rate() const override { return config_.sample_rate; }

    std::string transcribe(const AudioClip& clip) const override;
    double adversarial_loss(const AudioClip& clip, const std::string& target) const override;
    std::vector<double> loss_gradient(const AudioClip& clip,
                                      const std::string& target) const override;

    const ToyCtcConfig& config() const { return config_; }
    std::string param_digest() const;

    size_t param_count() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // Network internals exposed for the trainer.
    struct Trace {
        Matrix feat;    // T x n_mels
        Matrix pre1;    // T1 x C1
        Matrix act1;
        Matrix pre2;    // T1 x C2
        Matrix act2;
        Matrix logits;  // T1 x V
    };

    Matrix features(const AudioClip& clip) const;
    Trace run_net(const Matrix& feat) const;
    // Backpropagate d(loss)/d(logits). Either output may be null.
    void backward(const Trace& trace, const Matrix& logit_grad, std::vector<double>* param_grad,
                  Matrix* feat_grad) const;
    // Chain a feature gradient down to the input samples.
    std::vector<double> feature_gradient_to_samples(const AudioClip& clip,
                                                    const Matrix& feat_grad) const;

    ToyTrainStats train_stats;

private:
    void check_clip(const AudioClip& clip) const;

    std::string id_;
    ToyCtcConfig config_;
    MelFrontEnd front_;
    std::vector<double> params_;
    // offsets into params_
    size_t w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0, wl_ = 0, bl_ = 0;
};

struct LabeledClip {
    AudioClip audio;  // peak-normalized to 0.5
    std::string text;
};

struct ToyTrainOptions {
    int max_epochs = 400;
    int clean_epochs = 30;  // warm-up phase without augmentation
    int eval_every = 5;
    double learning_rate = 3e-3;
    double stop_token_error = 0.0;  // early-stop target on clean decodes
    double max_token_error = 0.05;  // contract bound at the epoch cap
    int augment_per_sample = 2;
    double gain_min = 0.3;
    double gain_max = 1.0;
    double noise_std_min = 0.002;
    double noise_std_max = 0.05;
    double background_gain_min = 0.3;
    double background_gain_max = 1.0;
    // Fraction of background-mixed variants that embed the command inside a
    // longer background window (up to pad_factor extra length) so the model
    // learns to stay silent over command-free audio.
    double embed_prob = 0.6;
    double pad_factor = 1.0;
    // Optional carrier-like clips mixed under augmented samples so the model
    // stays reliable when a command rides on top of other audio.
    std::vector<AudioClip> backgrounds;
};

// Adam with one update per utterance (clean variant plus augments). Stops
// early once clean token error reaches stop_token_error; at the epoch cap the
// run still counts as converged at max_token_error or better, otherwise
// raises NonConvergence.
ToyTrainStats train_toy_ctc(ToyCtcModel& model, const std::vector<LabeledClip>& corpus,
                            const ToyTrainOptions& options, SeededRng& rng);

// Character error rate of greedy decodes against references, over the corpus.
double token_error_rate(const ToyCtcModel& model, const std::vector<LabeledClip>& corpus);

}  // namespace siren
