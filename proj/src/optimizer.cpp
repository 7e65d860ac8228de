#include "siren/optimizer.hpp"

#include <cmath>

#include "siren/text.hpp"
#include "siren/wav_io.hpp"

namespace siren {

void AttackConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!std::isfinite(alpha) || alpha < 0.0)
        fail(ErrorCode::InvalidConfig, "alpha must be finite and >= 0");
    if (!positive(epsilon)) fail(ErrorCode::InvalidConfig, "epsilon must be positive");
    if (!std::isfinite(eta) || eta < 0.0 || eta > 1.0)
        fail(ErrorCode::InvalidConfig, "eta must lie in [0, 1]");
    if (!std::isfinite(sigma_std) || sigma_std < 0.0)
        fail(ErrorCode::InvalidConfig, "sigma_std must be >= 0");
    if (max_steps < 1) fail(ErrorCode::InvalidConfig, "max_steps must be >= 1");
    weights.validate();
    init.validate();
}

std::vector<double> clip_to_carrier(const std::vector<double>& delta,
                                    const std::vector<double>& carrier, double epsilon) {
    if (delta.size() != carrier.size())
        fail(ErrorCode::LengthMismatch, "clip_to_carrier: length mismatch");
    std::vector<double> out(delta.size());
    for (size_t i = 0; i < delta.size(); ++i) {
        double bound = epsilon * std::fabs(carrier[i]);
        out[i] = std::max(std::min(delta[i], bound), -bound);
    }
    return out;
}

std::vector<double> outer_update(const std::vector<std::vector<double>>& deltas,
                                 const std::vector<double>& delta0, double eta) {
    if (deltas.empty()) fail(ErrorCode::InvalidArgument, "outer_update: no inner deltas");
    for (const auto& d : deltas)
        if (d.size() != delta0.size())
            fail(ErrorCode::LengthMismatch, "outer_update: delta length mismatch");

    const double inv_k = 1.0 / static_cast<double>(deltas.size());
    std::vector<double> out(delta0.size());
    for (size_t i = 0; i < delta0.size(); ++i) {
        double mean = 0.0;
        for (const auto& d : deltas) mean += d[i];
        mean *= inv_k;
        out[i] = eta * mean + (1.0 - eta) * delta0[i];
    }
    return out;
}

SeqEnsembleOptimizer::SeqEnsembleOptimizer(AudioClip carrier, std::string target,
                                           std::optional<AudioClip> command_padded,
                                           const AttackConfig& config)
    : carrier_(std::move(carrier)),
      target_(std::move(target)),
      config_(config),
      loss_(carrier_, target_, config.weights, config.mfcc, std::move(command_padded)),
      noise_rng_(SeededRng::substream(config.seed, "noise")) {
    config_.validate();
    check_audio(carrier_, "optimizer carrier");
}

std::vector<double> SeqEnsembleOptimizer::inner_step(
    size_t j, const SurrogateModel& model, const std::vector<std::vector<double>>& deltas) {
    if (j == 0 || deltas.size() != j)
        fail(ErrorCode::InvalidArgument, "inner_step: expected exactly j perturbations");
    const size_t n = carrier_.samples.size();
    for (const auto& d : deltas)
        if (d.size() != n) fail(ErrorCode::LengthMismatch, "inner_step: delta length mismatch");

    // One noise draw shared by every gradient term of this (step, j); the
    // per-term variant is an ablation.
    std::vector<double> noise =
        config_.fresh_noise_per_delta ? std::vector<double>()
                                      : noise_rng_.gaussian_vector(n, config_.sigma_std);

    std::vector<double> grad_sum(n, 0.0);
    std::vector<double> noised(n);
    for (const auto& d : deltas) {
        if (config_.fresh_noise_per_delta)
            noise = noise_rng_.gaussian_vector(n, config_.sigma_std);
        for (size_t i = 0; i < n; ++i) noised[i] = d[i] + (noise.empty() ? 0.0 : noise[i]);
        std::vector<double> g = config_.adversarial_only_update
                                    ? loss_.adversarial_gradient(model, noised)
                                    : loss_.gradient(model, noised);
        for (size_t i = 0; i < n; ++i) {
            if (!std::isfinite(g[i]))
                fail(ErrorCode::NonFiniteGradient,
                     "inner_step: non-finite gradient from " + model.id() + " at j=" +
                         std::to_string(j) + ", sample " + std::to_string(i));
            grad_sum[i] += g[i];
        }
    }

    const double scale = config_.alpha / static_cast<double>(j);
    std::vector<double> updated(n);
    for (size_t i = 0; i < n; ++i) updated[i] = deltas[0][i] - scale * grad_sum[i];
    return clip_to_carrier(updated, carrier_.samples, config_.epsilon);
}

AttackResult SeqEnsembleOptimizer::run(SurrogateEnsemble& ensemble, const Perturbation& initial) {
    if (initial.delta.size() != carrier_.samples.size())
        fail(ErrorCode::LengthMismatch, "run: initial delta length mismatch");

    AttackResult result;
    result.target = target_;
    if (initial.meta) result.init = *initial.meta;

    std::vector<double> delta = initial.delta;
    const size_t n = delta.size();
    const size_t k_models = ensemble.size();

    AudioClip adversarial;
    adversarial.sample_rate = carrier_.sample_rate;

    for (int step = 1; step <= config_.max_steps; ++step) {
        try {
            ensemble.shuffle();
            std::vector<std::vector<double>> deltas;
            deltas.reserve(k_models + 1);
            deltas.push_back(delta);  // delta_0
            for (size_t j = 1; j <= k_models; ++j)
                deltas.push_back(inner_step(j, ensemble.member(j - 1), deltas));

            std::vector<std::vector<double>> inner(deltas.begin() + 1, deltas.end());
            delta = outer_update(inner, deltas[0], config_.eta);
            // Alg. invariant: every delta the loop emits obeys the carrier
            // bound exactly. The blend of clipped deltas satisfies it
            // mathematically; clipping again removes last-ulp overshoot and
            // covers the unclipped init-stage delta on the first step.
            delta = clip_to_carrier(delta, carrier_.samples, config_.epsilon);

            adversarial.samples = carrier_.samples;
            for (size_t i = 0; i < n; ++i) adversarial.samples[i] += delta[i];
            bool valid = validate_on_all(ensemble, adversarial, target_);

            StepTrace tr;
            tr.step = step;
            tr.valid = valid;
            std::vector<LossBreakdown> breakdowns = loss_.evaluate_all(ensemble.members(), delta);
            for (size_t m = 0; m < ensemble.size(); ++m)
                tr.losses.push_back({ensemble.member(m).id(), breakdowns[m]});
            result.trace.push_back(std::move(tr));

            if (valid) {
                ValidExample ex;
                ex.audio = adversarial;
                ex.delta = delta;
                ex.step = step;
                ex.snr_db = snr_db(carrier_, delta);
                AudioClip quantized;
                quantized.sample_rate = adversarial.sample_rate;
                quantized.samples = quantize_pcm16(adversarial.samples);
                ex.valid_after_quantization = validate_on_all(ensemble, quantized, target_);
                result.valid_set.push_back(std::move(ex));
                if (config_.stop_after_first_valid) break;
            }
        } catch (const Error& e) {
            throw Error(e.code(), "outer step " + std::to_string(step) + ": " + e.what());
        }
    }

    result.final_delta.delta = std::move(delta);
    result.final_delta.stage = PerturbStage::Outer;
    result.final_delta.meta = initial.meta;
    return result;
}

AttackResult run_attack(const AudioClip& carrier, const std::string& target,
                        const AudioClip& command_audio, SurrogateEnsemble& ensemble,
                        const AttackConfig& config) {
    config.validate();
    Perturbation init = ada_search(carrier, target, command_audio, ensemble, config.init);

    std::optional<AudioClip> command_padded;
    if (config.weights.c2 > 0.0) {
        AudioClip padded;
        padded.sample_rate = command_audio.sample_rate;
        padded.samples =
            pad_command(command_audio.samples, carrier.samples.size(), init.meta->position);
        command_padded = std::move(padded);
    }

    SeqEnsembleOptimizer optimizer(carrier, target, std::move(command_padded), config);
    return optimizer.run(ensemble, init);
}

}  // namespace siren
