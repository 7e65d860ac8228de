#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "siren/audio.hpp"
#include "siren/rng.hpp"

namespace siren {

enum class ModelCategory { CnnBased, TransformerBased, Mock };
enum class DecoderKind { Ctc, Transducer, ThresholdMock };

const char* to_string(ModelCategory category);
const char* to_string(DecoderKind kind);
ModelCategory category_from_string(const std::string& s);
DecoderKind decoder_kind_from_string(const std::string& s);

// A differentiable recognizer: transcribe, target loss, and the loss
// gradient w.r.t. the input samples. Implementations are immutable after
// construction; calls on distinct inputs may run concurrently.
class SurrogateModel {
public:
    virtual ~SurrogateModel() = default;

    virtual const std::string& id() const = 0;
    virtual ModelCategory category() const = 0;
    virtual DecoderKind decoder_kind() const = 0;
    // 0 means any rate is accepted.
    virtual int sample_rate() const = 0;

    // Greedy decode; lowercase, single-space-separated words. Deterministic.
    virtual std::string transcribe(const AudioClip& clip) const = 0;

    // Lower is closer to the target transcription.
    virtual double adversarial_loss(const AudioClip& clip, const std::string& target) const = 0;

    // d(adversarial_loss)/d(samples); same length as the clip.
    virtual std::vector<double> loss_gradient(const AudioClip& clip,
                                              const std::string& target) const = 0;
};

// Deterministic stand-in recognizer: emits its configured text iff the mean
// absolute amplitude over [window_begin, window_end) reaches the threshold.
// The loss is a squared hinge on that mean, a smooth surrogate that lets
// optimizer tests run without a neural model.
class ThresholdMock : public SurrogateModel {
public:
    ThresholdMock(std::string id, std::string text, double threshold, size_t window_begin = 0,
                  size_t window_end = std::numeric_limits<size_t>::max());

    static std::shared_ptr<ThresholdMock> always_accept(std::string id, std::string text);
    static std::shared_ptr<ThresholdMock> always_reject(std::string id);

    const std::string& id() const override { return id_; }
    ModelCategory category() const override { return ModelCategory::Mock; }
    DecoderKind decoder_kind() const override { return DecoderKind::ThresholdMock; }
    int sample_rate() const override { return 0; }

    std::string transcribe(const AudioClip& clip) const override;
    double adversarial_loss(const AudioClip& clip, const std::string& target) const override;
    std::vector<double> loss_gradient(const AudioClip& clip,
                                      const std::string& target) const override;

    double threshold() const { return threshold_; }
    size_t window_begin() const { return window_begin_; }
    size_t window_end() const { return window_end_; }
    const std::string& text() const { return text_; }

private:
    double window_mean(const AudioClip& clip) const;
    std::pair<size_t, size_t> clamp_window(size_t len) const;

    std::string id_;
    std::string text_;  // normalized
    double threshold_;
    size_t window_begin_;
    size_t window_end_;
};

// Transcribes by clip length: the transcript of the longest rule whose
// minimum length fits. Defense tests use it to script prefix-vs-full
// behavior. Loss and gradient are identically zero.
class ScriptedMock : public SurrogateModel {
public:
    struct Rule {
        size_t min_length;
        std::string transcript;
    };

    ScriptedMock(std::string id, std::vector<Rule> rules);

    const std::string& id() const override { return id_; }
    ModelCategory category() const override { return ModelCategory::Mock; }
    DecoderKind decoder_kind() const override { return DecoderKind::ThresholdMock; }
    int sample_rate() const override { return 0; }

    std::string transcribe(const AudioClip& clip) const override;
    double adversarial_loss(const AudioClip&, const std::string&) const override { return 0.0; }
    std::vector<double> loss_gradient(const AudioClip& clip, const std::string&) const override {
        return std::vector<double>(clip.samples.size(), 0.0);
    }

private:
    std::string id_;
    std::vector<Rule> rules_;  // sorted by min_length
};

// Ordered set of surrogate models with a seeded shuffle. Member ids must be
// unique. The shuffle RNG is single-owner: call from one logical thread.
class SurrogateEnsemble {
public:
    SurrogateEnsemble(std::vector<std::shared_ptr<SurrogateModel>> members, uint64_t rng_seed);

    size_t size() const { return members_.size(); }
    const std::vector<std::shared_ptr<SurrogateModel>>& members() const { return members_; }
    const SurrogateModel& member(size_t i) const { return *members_[i]; }

    // Fisher-Yates permutation in place; the member multiset is preserved.
    void shuffle();

private:
    std::vector<std::shared_ptr<SurrogateModel>> members_;
    SeededRng rng_;
};

// True iff every member transcribes the clip exactly as the target after
// case and whitespace normalization.
bool validate_on_all(const SurrogateEnsemble& ensemble, const AudioClip& clip,
                     const std::string& target);

// Interface conformance checks run against any registered adapter:
// transcribe determinism, gradient shape, finite loss, finite-difference
// agreement on a few coordinates, and tokenizer error behavior.
struct ConformanceReport {
    bool ok = true;
    std::vector<std::string> failures;
};

ConformanceReport run_conformance(const SurrogateModel& model, const AudioClip& probe,
                                  const std::string& target);

}  // namespace siren
