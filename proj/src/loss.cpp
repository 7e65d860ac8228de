#include "siren/loss.hpp"

#include <cmath>

namespace siren {

namespace {

double stabilized_denominator(double x) {
    double mag = std::max(std::fabs(x), kRatioDenominatorFloor);
    return x < 0.0 ? -mag : mag;
}

void check_lengths(size_t carrier, size_t delta, const char* what) {
    if (carrier != delta) fail(ErrorCode::LengthMismatch, std::string(what) + ": length mismatch");
}

}  // namespace

void LossWeights::validate() const {
    if (!(c1 >= 0.0) || !std::isfinite(c1) || !(c2 >= 0.0) || !std::isfinite(c2))
        fail(ErrorCode::InvalidConfig, "loss weights must be finite and non-negative");
}

double imperceptibility_loss(const std::vector<double>& carrier,
                             const std::vector<double>& delta) {
    check_lengths(carrier.size(), delta.size(), "imperceptibility_loss");
    double acc = 0.0;
    for (size_t i = 0; i < delta.size(); ++i) {
        double r = delta[i] / stabilized_denominator(carrier[i]);
        acc += r * r;
    }
    return std::sqrt(acc);
}

std::vector<double> imperceptibility_loss_gradient(const std::vector<double>& carrier,
                                                   const std::vector<double>& delta) {
    check_lengths(carrier.size(), delta.size(), "imperceptibility_loss_gradient");
    double norm = imperceptibility_loss(carrier, delta);
    std::vector<double> grad(delta.size(), 0.0);
    if (norm == 0.0) return grad;  // zero subgradient at the origin
    for (size_t i = 0; i < delta.size(); ++i) {
        double d = stabilized_denominator(carrier[i]);
        grad[i] = delta[i] / (d * d) / norm;
    }
    return grad;
}

double acoustic_feature_loss(const AudioClip& carrier, const std::vector<double>& delta,
                             const AudioClip& command_audio, const MfccConfig& config) {
    check_lengths(carrier.samples.size(), delta.size(), "acoustic_feature_loss");
    MfccTransform transform(config, carrier.sample_rate);
    AudioClip adv = carrier;
    for (size_t i = 0; i < delta.size(); ++i) adv.samples[i] += delta[i];
    MfccFeatures fx = transform.compute(adv);
    MfccFeatures ft = transform.compute(command_audio);
    if (!fx.coeffs.same_shape(ft.coeffs))
        fail(ErrorCode::FrameCountMismatch,
             "acoustic_feature_loss: adversarial example and command audio frame grids differ");
    double acc = 0.0;
    for (size_t i = 0; i < fx.coeffs.data.size(); ++i) {
        double d = fx.coeffs.data[i] - ft.coeffs.data[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

std::vector<double> acoustic_feature_loss_gradient(const AudioClip& carrier,
                                                   const std::vector<double>& delta,
                                                   const AudioClip& command_audio,
                                                   const MfccConfig& config) {
    check_lengths(carrier.samples.size(), delta.size(), "acoustic_feature_loss_gradient");
    MfccTransform transform(config, carrier.sample_rate);
    AudioClip adv = carrier;
    for (size_t i = 0; i < delta.size(); ++i) adv.samples[i] += delta[i];
    MfccFeatures fx = transform.compute(adv);
    MfccFeatures ft = transform.compute(command_audio);
    if (!fx.coeffs.same_shape(ft.coeffs))
        fail(ErrorCode::FrameCountMismatch,
             "acoustic_feature_loss_gradient: frame grids differ");

    double norm = 0.0;
    for (size_t i = 0; i < fx.coeffs.data.size(); ++i) {
        double d = fx.coeffs.data[i] - ft.coeffs.data[i];
        norm += d * d;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return std::vector<double>(delta.size(), 0.0);

    Matrix coeff_grad(fx.coeffs.rows, fx.coeffs.cols);
    for (size_t i = 0; i < fx.coeffs.data.size(); ++i)
        coeff_grad.data[i] = (fx.coeffs.data[i] - ft.coeffs.data[i]) / norm;
    return transform.input_gradient(adv, coeff_grad);
}

CompositeLoss::CompositeLoss(AudioClip carrier, std::string target, LossWeights weights,
                             MfccConfig mfcc, std::optional<AudioClip> command_padded)
    : carrier_(std::move(carrier)),
      target_(std::move(target)),
      weights_(weights),
      mfcc_config_(mfcc),
      command_padded_(std::move(command_padded)) {
    check_audio(carrier_, "composite loss carrier");
    weights_.validate();
    if (weights_.c2 > 0.0) {
        if (!command_padded_)
            fail(ErrorCode::InvalidArgument,
                 "composite loss: c2 > 0 requires the padded command audio");
        check_lengths(carrier_.samples.size(), command_padded_->samples.size(), "composite loss");
        mfcc_ = std::make_unique<MfccTransform>(mfcc_config_, carrier_.sample_rate);
        command_features_ = mfcc_->compute(*command_padded_).coeffs;
    }
}

AudioClip CompositeLoss::adversarial_example(const std::vector<double>& delta) const {
    check_lengths(carrier_.samples.size(), delta.size(), "composite loss delta");
    AudioClip adv = carrier_;
    for (size_t i = 0; i < delta.size(); ++i) adv.samples[i] += delta[i];
    return adv;
}

LossBreakdown CompositeLoss::evaluate(const SurrogateModel& model,
                                      const std::vector<double>& delta) const {
    AudioClip adv = adversarial_example(delta);
    LossBreakdown out;
    out.adversarial = model.adversarial_loss(adv, target_);
    out.imperceptibility = imperceptibility_loss(carrier_.samples, delta);
    if (weights_.c2 > 0.0) {
        MfccFeatures fx = mfcc_->compute(adv);
        double acc = 0.0;
        for (size_t i = 0; i < fx.coeffs.data.size(); ++i) {
            double d = fx.coeffs.data[i] - command_features_.data[i];
            acc += d * d;
        }
        out.acoustic_feature = std::sqrt(acc);
    }
    out.total = out.adversarial + weights_.c1 * out.imperceptibility +
                weights_.c2 * out.acoustic_feature;
    return out;
}

std::vector<LossBreakdown> CompositeLoss::evaluate_all(
    const std::vector<std::shared_ptr<SurrogateModel>>& models,
    const std::vector<double>& delta) const {
    AudioClip adv = adversarial_example(delta);
    double imperceptibility = imperceptibility_loss(carrier_.samples, delta);
    double acoustic = 0.0;
    if (weights_.c2 > 0.0) {
        MfccFeatures fx = mfcc_->compute(adv);
        double acc = 0.0;
        for (size_t i = 0; i < fx.coeffs.data.size(); ++i) {
            double d = fx.coeffs.data[i] - command_features_.data[i];
            acc += d * d;
        }
        acoustic = std::sqrt(acc);
    }
    std::vector<LossBreakdown> out;
    out.reserve(models.size());
    for (const auto& model : models) {
        LossBreakdown b;
        b.adversarial = model->adversarial_loss(adv, target_);
        b.imperceptibility = imperceptibility;
        b.acoustic_feature = acoustic;
        b.total = b.adversarial + weights_.c1 * imperceptibility + weights_.c2 * acoustic;
        out.push_back(b);
    }
    return out;
}

std::vector<double> CompositeLoss::adversarial_gradient(const SurrogateModel& model,
                                                        const std::vector<double>& delta) const {
    return model.loss_gradient(adversarial_example(delta), target_);
}

std::vector<double> CompositeLoss::gradient(const SurrogateModel& model,
                                            const std::vector<double>& delta) const {
    AudioClip adv = adversarial_example(delta);
    std::vector<double> grad = model.loss_gradient(adv, target_);

    if (weights_.c1 > 0.0) {
        std::vector<double> gp = imperceptibility_loss_gradient(carrier_.samples, delta);
        for (size_t i = 0; i < grad.size(); ++i) grad[i] += weights_.c1 * gp[i];
    }

    if (weights_.c2 > 0.0) {
        MfccFeatures fx = mfcc_->compute(adv);
        double norm = 0.0;
        for (size_t i = 0; i < fx.coeffs.data.size(); ++i) {
            double d = fx.coeffs.data[i] - command_features_.data[i];
            norm += d * d;
        }
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            Matrix coeff_grad(fx.coeffs.rows, fx.coeffs.cols);
            for (size_t i = 0; i < fx.coeffs.data.size(); ++i)
                coeff_grad.data[i] = (fx.coeffs.data[i] - command_features_.data[i]) / norm;
            std::vector<double> gf = mfcc_->input_gradient(adv, coeff_grad);
            for (size_t i = 0; i < grad.size(); ++i) grad[i] += weights_.c2 * gf[i];
        }
    }
    return grad;
}

LossBreakdown total_loss(const AudioClip& carrier, const std::vector<double>& delta,
                         const std::string& target, const SurrogateModel& model,
                         const LossWeights& weights, const MfccConfig& mfcc_config,
                         const std::optional<AudioClip>& command_padded) {
    return CompositeLoss(carrier, target, weights, mfcc_config, command_padded)
        .evaluate(model, delta);
}

std::vector<double> total_loss_gradient(const AudioClip& carrier, const std::vector<double>& delta,
                                        const std::string& target, const SurrogateModel& model,
                                        const LossWeights& weights, const MfccConfig& mfcc_config,
                                        const std::optional<AudioClip>& command_padded) {
    return CompositeLoss(carrier, target, weights, mfcc_config, command_padded)
        .gradient(model, delta);
}

}  // namespace siren
