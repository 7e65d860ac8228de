#include "siren/toy_ctc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "siren/ctc.hpp"
#include "siren/sha256.hpp"
#include "siren/text.hpp"

namespace siren {

namespace {

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

size_t conv_out_frames(size_t t_in, int kernel, int stride) {
    int pad = (kernel - 1) / 2;
    return (t_in + 2 * pad - kernel) / stride + 1;
}

}  // namespace

ToyCtcModel::ToyCtcModel(std::string id, const ToyCtcConfig& config, uint64_t init_seed)
    : id_(std::move(id)),
      config_(config),
      front_(config.frame_length, config.hop_length, config.n_mels, config.sample_rate,
             config.log_floor) {
    const int m = config_.n_mels;
    const int c1 = config_.conv1_channels;
    const int c2 = config_.conv2_channels;
    const int k = config_.kernel;
    const int v = CharVocab::kSize;

    w1_ = 0;
    b1_ = w1_ + static_cast<size_t>(c1) * m * k;
    w2_ = b1_ + c1;
    b2_ = w2_ + static_cast<size_t>(c2) * c1 * k;
    wl_ = b2_ + c2;
    bl_ = wl_ + static_cast<size_t>(v) * c2;
    params_.assign(bl_ + v, 0.0);

    SeededRng rng(init_seed);
    auto uniform_init = [&](size_t begin, size_t count, int fan_in) {
        double lim = std::sqrt(6.0 / fan_in);
        for (size_t i = begin; i < begin + count; ++i)
            params_[i] = lim * (2.0 * rng.next_unit() - 1.0);
    };
    uniform_init(w1_, b1_ - w1_, m * k);
    uniform_init(w2_, b2_ - w2_, c1 * k);
    uniform_init(wl_, static_cast<size_t>(v) * c2, c2);
}

void ToyCtcModel::check_clip(const AudioClip& clip) const {
    check_audio(clip, "toy ctc input");
    if (clip.sample_rate != config_.sample_rate)
        fail(ErrorCode::UnsupportedSampleRate, id_ + ": expects " +
                                                   std::to_string(config_.sample_rate) + " Hz");
    if (clip.samples.size() < static_cast<size_t>(config_.frame_length))
        fail(ErrorCode::AudioTooShort, id_ + ": clip shorter than one analysis frame");
}

Matrix ToyCtcModel::features(const AudioClip& clip) const {
    check_clip(clip);
    Matrix lm = front_.log_mel(clip);
    for (double& x : lm.data) x = (x - config_.feat_shift) * config_.feat_scale;
    return lm;
}

ToyCtcModel::Trace ToyCtcModel::run_net(const Matrix& feat) const {
    const int m = config_.n_mels;
    const int c1 = config_.conv1_channels;
    const int c2 = config_.conv2_channels;
    const int k = config_.kernel;
    const int pad = (k - 1) / 2;
    const int v = CharVocab::kSize;
    const size_t t_in = feat.rows;
    const size_t t1 = conv_out_frames(t_in, k, config_.time_stride);

    Trace tr;
    tr.feat = feat;
    tr.pre1 = Matrix(t1, c1);
    for (size_t to = 0; to < t1; ++to) {
        for (int co = 0; co < c1; ++co) {
            double acc = params_[b1_ + co];
            const double* w = &params_[w1_ + (static_cast<size_t>(co) * m) * k];
            for (int ci = 0; ci < m; ++ci) {
                for (int kk = 0; kk < k; ++kk) {
                    long long ti = static_cast<long long>(to) * config_.time_stride - pad + kk;
                    if (ti < 0 || ti >= static_cast<long long>(t_in)) continue;
                    acc += w[ci * k + kk] * feat.at(static_cast<size_t>(ti), ci);
                }
            }
            tr.pre1.at(to, co) = acc;
        }
    }
    tr.act1 = tr.pre1;
    for (double& x : tr.act1.data) x = softplus(x);

    tr.pre2 = Matrix(t1, c2);
    for (size_t to = 0; to < t1; ++to) {
        for (int co = 0; co < c2; ++co) {
            double acc = params_[b2_ + co];
            const double* w = &params_[w2_ + (static_cast<size_t>(co) * c1) * k];
            for (int ci = 0; ci < c1; ++ci) {
                for (int kk = 0; kk < k; ++kk) {
                    long long ti = static_cast<long long>(to) - pad + kk;
                    if (ti < 0 || ti >= static_cast<long long>(t1)) continue;
                    acc += w[ci * k + kk] * tr.act1.at(static_cast<size_t>(ti), ci);
                }
            }
            tr.pre2.at(to, co) = acc;
        }
    }
    tr.act2 = tr.pre2;
    for (double& x : tr.act2.data) x = softplus(x);

    tr.logits = Matrix(t1, v);
    for (size_t t = 0; t < t1; ++t) {
        for (int vi = 0; vi < v; ++vi) {
            double acc = params_[bl_ + vi];
            const double* w = &params_[wl_ + static_cast<size_t>(vi) * c2];
            for (int ci = 0; ci < c2; ++ci) acc += w[ci] * tr.act2.at(t, ci);
            tr.logits.at(t, vi) = acc;
        }
    }
    return tr;
}

void ToyCtcModel::backward(const Trace& tr, const Matrix& logit_grad,
                           std::vector<double>* param_grad, Matrix* feat_grad) const {
    const int m = config_.n_mels;
    const int c1 = config_.conv1_channels;
    const int c2 = config_.conv2_channels;
    const int k = config_.kernel;
    const int pad = (k - 1) / 2;
    const int v = CharVocab::kSize;
    const size_t t_in = tr.feat.rows;
    const size_t t1 = tr.pre1.rows;

    if (param_grad && param_grad->size() != params_.size())
        param_grad->assign(params_.size(), 0.0);

    // linear head
    Matrix d_act2(t1, c2, 0.0);
    for (size_t t = 0; t < t1; ++t) {
        for (int vi = 0; vi < v; ++vi) {
            double g = logit_grad.at(t, vi);
            if (g == 0.0) continue;
            const double* w = &params_[wl_ + static_cast<size_t>(vi) * c2];
            for (int ci = 0; ci < c2; ++ci) d_act2.at(t, ci) += w[ci] * g;
            if (param_grad) {
                double* dw = &(*param_grad)[wl_ + static_cast<size_t>(vi) * c2];
                for (int ci = 0; ci < c2; ++ci) dw[ci] += tr.act2.at(t, ci) * g;
                (*param_grad)[bl_ + vi] += g;
            }
        }
    }

    // softplus' = sigmoid of the pre-activation
    Matrix d_pre2 = d_act2;
    for (size_t i = 0; i < d_pre2.data.size(); ++i) d_pre2.data[i] *= sigmoid(tr.pre2.data[i]);

    // conv2 (stride 1)
    Matrix d_act1(t1, c1, 0.0);
    for (size_t to = 0; to < t1; ++to) {
        for (int co = 0; co < c2; ++co) {
            double g = d_pre2.at(to, co);
            if (g == 0.0) continue;
            const double* w = &params_[w2_ + (static_cast<size_t>(co) * c1) * k];
            double* dw = param_grad ? &(*param_grad)[w2_ + (static_cast<size_t>(co) * c1) * k]
                                    : nullptr;
            for (int ci = 0; ci < c1; ++ci) {
                for (int kk = 0; kk < k; ++kk) {
                    long long ti = static_cast<long long>(to) - pad + kk;
                    if (ti < 0 || ti >= static_cast<long long>(t1)) continue;
                    d_act1.at(static_cast<size_t>(ti), ci) += w[ci * k + kk] * g;
                    if (dw) dw[ci * k + kk] += tr.act1.at(static_cast<size_t>(ti), ci) * g;
                }
            }
            if (param_grad) (*param_grad)[b2_ + co] += g;
        }
    }

    Matrix d_pre1 = d_act1;
    for (size_t i = 0; i < d_pre1.data.size(); ++i) d_pre1.data[i] *= sigmoid(tr.pre1.data[i]);

    // conv1 (time stride)
    if (feat_grad) *feat_grad = Matrix(t_in, m, 0.0);
    for (size_t to = 0; to < t1; ++to) {
        for (int co = 0; co < c1; ++co) {
            double g = d_pre1.at(to, co);
            if (g == 0.0) continue;
            const double* w = &params_[w1_ + (static_cast<size_t>(co) * m) * k];
            double* dw = param_grad ? &(*param_grad)[w1_ + (static_cast<size_t>(co) * m) * k]
                                    : nullptr;
            for (int ci = 0; ci < m; ++ci) {
                for (int kk = 0; kk < k; ++kk) {
                    long long ti = static_cast<long long>(to) * config_.time_stride - pad + kk;
                    if (ti < 0 || ti >= static_cast<long long>(t_in)) continue;
                    if (feat_grad)
                        feat_grad->at(static_cast<size_t>(ti), ci) += w[ci * k + kk] * g;
                    if (dw) dw[ci * k + kk] += tr.feat.at(static_cast<size_t>(ti), ci) * g;
                }
            }
            if (param_grad) (*param_grad)[b1_ + co] += g;
        }
    }
}

std::vector<double> ToyCtcModel::feature_gradient_to_samples(const AudioClip& clip,
                                                             const Matrix& feat_grad) const {
    Matrix d_logmel = feat_grad;
    for (double& x : d_logmel.data) x *= config_.feat_scale;
    return front_.input_gradient(clip, d_logmel);
}

std::string ToyCtcModel::transcribe(const AudioClip& clip) const {
    Trace tr = run_net(features(clip));
    std::vector<int> tokens = ctc_greedy_tokens(tr.logits, CharVocab::kBlank);
    return normalize_transcript(CharVocab::to_string(tokens));
}

double ToyCtcModel::adversarial_loss(const AudioClip& clip, const std::string& target) const {
    std::vector<int> labels = CharVocab::tokenize(target);
    Trace tr = run_net(features(clip));
    return ctc_loss(tr.logits, labels, CharVocab::kBlank);
}

std::vector<double> ToyCtcModel::loss_gradient(const AudioClip& clip,
                                               const std::string& target) const {
    std::vector<int> labels = CharVocab::tokenize(target);
    Trace tr = run_net(features(clip));
    CtcEvaluation eval = ctc_loss_with_grad(tr.logits, labels, CharVocab::kBlank);
    Matrix d_feat;
    backward(tr, eval.logit_grad, nullptr, &d_feat);
    return feature_gradient_to_samples(clip, d_feat);
}

std::string ToyCtcModel::param_digest() const {
    Sha256 h;
    h.update(params_.data(), params_.size() * sizeof(double));
    return h.hex_digest();
}

void ToyCtcModel::save(const std::filesystem::path& checkpoint) const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kind"] = "toy_ctc";
    j["id"] = id_;
    j["config"] = {{"sample_rate", config_.sample_rate},
                   {"frame_length", config_.frame_length},
                   {"hop_length", config_.hop_length},
                   {"n_mels", config_.n_mels},
                   {"log_floor", config_.log_floor},
                   {"feat_shift", config_.feat_shift},
                   {"feat_scale", config_.feat_scale},
                   {"conv1_channels", config_.conv1_channels},
                   {"conv2_channels", config_.conv2_channels},
                   {"kernel", config_.kernel},
                   {"time_stride", config_.time_stride}};
    j["params"] = params_;
    j["train"] = {{"epochs", train_stats.epochs},
                  {"token_error", train_stats.token_error},
                  {"mean_loss", train_stats.mean_loss}};
    std::ofstream f(checkpoint, std::ios::trunc);
    if (!f) fail(ErrorCode::IoError, "cannot write checkpoint: " + checkpoint.string());
    f << j.dump(2) << "\n";
}

std::shared_ptr<ToyCtcModel> ToyCtcModel::load(const std::filesystem::path& checkpoint) {
    std::ifstream f(checkpoint);
    if (!f) fail(ErrorCode::IoError, "cannot read checkpoint: " + checkpoint.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::IoError, "bad checkpoint json: " + std::string(e.what()));
    }
    if (j.value("kind", "") != "toy_ctc")
        fail(ErrorCode::InvalidConfig, "checkpoint is not a toy_ctc model");

    ToyCtcConfig cfg;
    const auto& jc = j.at("config");
    cfg.sample_rate = jc.at("sample_rate").get<int>();
    cfg.frame_length = jc.at("frame_length").get<int>();
    cfg.hop_length = jc.at("hop_length").get<int>();
    cfg.n_mels = jc.at("n_mels").get<int>();
    cfg.log_floor = jc.at("log_floor").get<double>();
    cfg.feat_shift = jc.at("feat_shift").get<double>();
    cfg.feat_scale = jc.at("feat_scale").get<double>();
    cfg.conv1_channels = jc.at("conv1_channels").get<int>();
    cfg.conv2_channels = jc.at("conv2_channels").get<int>();
    cfg.kernel = jc.at("kernel").get<int>();
    cfg.time_stride = jc.at("time_stride").get<int>();

    auto model = std::make_shared<ToyCtcModel>(j.at("id").get<std::string>(), cfg, 0);
    std::vector<double> params = j.at("params").get<std::vector<double>>();
    if (params.size() != model->params_.size())
        fail(ErrorCode::InvalidConfig, "checkpoint parameter count mismatch");
    model->params_ = std::move(params);
    if (j.contains("train")) {
        model->train_stats.epochs = j["train"].value("epochs", 0);
        model->train_stats.token_error = j["train"].value("token_error", 1.0);
        model->train_stats.mean_loss = j["train"].value("mean_loss", 0.0);
    }
    return model;
}

double token_error_rate(const ToyCtcModel& model, const std::vector<LabeledClip>& corpus) {
    size_t total_ref = 0;
    size_t total_dist = 0;
    for (const auto& item : corpus) {
        std::vector<int> ref = CharVocab::tokenize(item.text);
        Matrix logits = model.run_net(model.features(item.audio)).logits;
        std::vector<int> hyp = ctc_greedy_tokens(logits, CharVocab::kBlank);
        // token-level Levenshtein
        std::vector<size_t> prev(ref.size() + 1), cur(ref.size() + 1);
        for (size_t jj = 0; jj <= ref.size(); ++jj) prev[jj] = jj;
        for (size_t i = 1; i <= hyp.size(); ++i) {
            cur[0] = i;
            for (size_t jj = 1; jj <= ref.size(); ++jj) {
                size_t sub = prev[jj - 1] + (hyp[i - 1] == ref[jj - 1] ? 0 : 1);
                cur[jj] = std::min({prev[jj] + 1, cur[jj - 1] + 1, sub});
            }
            std::swap(prev, cur);
        }
        total_dist += prev[ref.size()];
        total_ref += ref.size();
    }
    return total_ref == 0 ? 0.0 : static_cast<double>(total_dist) / total_ref;
}

ToyTrainStats train_toy_ctc(ToyCtcModel& model, const std::vector<LabeledClip>& corpus,
                            const ToyTrainOptions& options, SeededRng& rng) {
    if (corpus.empty()) fail(ErrorCode::InvalidArgument, "empty training corpus");

    std::vector<std::vector<int>> labels;
    labels.reserve(corpus.size());
    for (const auto& item : corpus) labels.push_back(CharVocab::tokenize(item.text));

    const size_t n_params = model.param_count();
    std::vector<double> m1(n_params, 0.0), m2(n_params, 0.0);
    std::vector<double> grad(n_params, 0.0);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long adam_t = 0;

    auto adam_step = [&](size_t count) {
        double inv = 1.0 / static_cast<double>(count);
        ++adam_t;
        double bc1 = 1.0 - std::pow(beta1, adam_t);
        double bc2 = 1.0 - std::pow(beta2, adam_t);
        auto& params = model.params();
        for (size_t i = 0; i < n_params; ++i) {
            double g = grad[i] * inv;
            m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
            m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
            params[i] -= options.learning_rate * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + eps);
        }
        std::fill(grad.begin(), grad.end(), 0.0);
    };

    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    ToyTrainStats stats;
    double last_mean_loss = 0.0;

    for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        size_t epoch_count = 0;
        // Warm-up epochs see clean utterances only; augmentation joins later
        // so alignment is learned before robustness.
        int n_variants = epoch <= options.clean_epochs ? 0 : options.augment_per_sample;

        for (size_t idx : order) {
            for (int variant = 0; variant <= n_variants; ++variant) {
                AudioClip sample = corpus[idx].audio;
                if (variant > 0) {
                    double gain = options.gain_min +
                                  (options.gain_max - options.gain_min) * rng.next_unit();
                    for (double& s : sample.samples) s *= gain;
                    if (!options.backgrounds.empty() && rng.next_unit() < 0.5) {
                        const AudioClip& bg =
                            options.backgrounds[rng.next_index(options.backgrounds.size())];
                        double bgain = options.background_gain_min +
                                       (options.background_gain_max -
                                        options.background_gain_min) *
                                           rng.next_unit();
                        size_t extra = 0;
                        if (rng.next_unit() < options.embed_prob) {
                            size_t max_extra = static_cast<size_t>(
                                options.pad_factor * static_cast<double>(sample.samples.size()));
                            extra = rng.next_index(max_extra + 1);
                        }
                        size_t total = sample.samples.size() + extra;
                        if (bg.samples.size() >= total) {
                            size_t off = rng.next_index(bg.samples.size() - total + 1);
                            size_t cmd_at = extra == 0 ? 0 : rng.next_index(extra + 1);
                            std::vector<double> mixed(total);
                            for (size_t i = 0; i < total; ++i)
                                mixed[i] = bgain * bg.samples[off + i];
                            for (size_t i = 0; i < sample.samples.size(); ++i)
                                mixed[cmd_at + i] += sample.samples[i];
                            sample.samples = std::move(mixed);
                        }
                    }
                    double noise = options.noise_std_min +
                                   (options.noise_std_max - options.noise_std_min) *
                                       rng.next_unit();
                    for (double& s : sample.samples) s += noise * rng.next_gaussian();
                }

                ToyCtcModel::Trace tr = model.run_net(model.features(sample));
                CtcEvaluation eval = ctc_loss_with_grad(tr.logits, labels[idx], CharVocab::kBlank);
                loss_sum += eval.nll;
                model.backward(tr, eval.logit_grad, &grad, nullptr);
                ++epoch_count;
            }
            adam_step(n_variants + 1);  // one update per utterance
        }
        last_mean_loss = loss_sum / static_cast<double>(epoch_count);

        bool warmed_up = epoch > options.clean_epochs + options.eval_every;
        if (warmed_up && (epoch % options.eval_every == 0 || epoch == options.max_epochs)) {
            double err = token_error_rate(model, corpus);
            if (err <= options.stop_token_error) {
                stats.epochs = epoch;
                stats.token_error = err;
                stats.mean_loss = last_mean_loss;
                model.train_stats = stats;
                return stats;
            }
        }
    }

    double final_err = token_error_rate(model, corpus);
    if (final_err <= options.max_token_error) {
        stats.epochs = options.max_epochs;
        stats.token_error = final_err;
        stats.mean_loss = last_mean_loss;
        model.train_stats = stats;
        return stats;
    }
    fail(ErrorCode::NonConvergence,
         "toy ctc training failed to converge: token error " + std::to_string(final_err) +
             " after " + std::to_string(options.max_epochs) + " epochs");
}

}  // namespace siren
