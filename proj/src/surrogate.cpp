#include "siren/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "siren/text.hpp"

namespace siren {

const char* to_string(ModelCategory category) {
    switch (category) {
        case ModelCategory::CnnBased: return "cnn";
        case ModelCategory::TransformerBased: return "transformer";
        case ModelCategory::Mock: return "mock";
    }
    return "mock";
}

const char* to_string(DecoderKind kind) {
    switch (kind) {
        case DecoderKind::Ctc: return "ctc";
        case DecoderKind::Transducer: return "transducer";
        case DecoderKind::ThresholdMock: return "threshold_mock";
    }
    return "threshold_mock";
}

ModelCategory category_from_string(const std::string& s) {
    if (s == "cnn") return ModelCategory::CnnBased;
    if (s == "transformer") return ModelCategory::TransformerBased;
    if (s == "mock") return ModelCategory::Mock;
    fail(ErrorCode::InvalidConfig, "unknown model category: " + s);
}

DecoderKind decoder_kind_from_string(const std::string& s) {
    if (s == "ctc") return DecoderKind::Ctc;
    if (s == "transducer") return DecoderKind::Transducer;
    if (s == "threshold_mock") return DecoderKind::ThresholdMock;
    fail(ErrorCode::InvalidConfig, "unknown decoder kind: " + s);
}

ThresholdMock::ThresholdMock(std::string id, std::string text, double threshold,
                             size_t window_begin, size_t window_end)
    : id_(std::move(id)),
      text_(normalize_transcript(text)),
      threshold_(threshold),
      window_begin_(window_begin),
      window_end_(window_end) {
    if (window_end_ <= window_begin_)
        fail(ErrorCode::InvalidArgument, "mock window must be non-empty");
}

std::shared_ptr<ThresholdMock> ThresholdMock::always_accept(std::string id, std::string text) {
    return std::make_shared<ThresholdMock>(std::move(id), std::move(text), 0.0);
}

std::shared_ptr<ThresholdMock> ThresholdMock::always_reject(std::string id) {
    return std::make_shared<ThresholdMock>(std::move(id), "",
                                           std::numeric_limits<double>::infinity());
}

std::pair<size_t, size_t> ThresholdMock::clamp_window(size_t len) const {
    size_t b = std::min(window_begin_, len);
    size_t e = std::min(window_end_, len);
    return {b, e};
}

double ThresholdMock::window_mean(const AudioClip& clip) const {
    auto [b, e] = clamp_window(clip.samples.size());
    if (e <= b) return 0.0;
    double acc = 0.0;
    for (size_t i = b; i < e; ++i) acc += std::fabs(clip.samples[i]);
    return acc / static_cast<double>(e - b);
}

std::string ThresholdMock::transcribe(const AudioClip& clip) const {
    check_audio(clip, "mock transcribe");
    return window_mean(clip) >= threshold_ ? text_ : std::string();
}

double ThresholdMock::adversarial_loss(const AudioClip& clip, const std::string& target) const {
    check_audio(clip, "mock loss");
    CharVocab::tokenize(target);  // vocabulary check only
    double gap = threshold_ - window_mean(clip);
    return gap > 0.0 ? gap * gap : 0.0;
}

std::vector<double> ThresholdMock::loss_gradient(const AudioClip& clip,
                                                 const std::string& target) const {
    check_audio(clip, "mock gradient");
    CharVocab::tokenize(target);
    std::vector<double> grad(clip.samples.size(), 0.0);
    auto [b, e] = clamp_window(clip.samples.size());
    if (e <= b) return grad;
    double gap = threshold_ - window_mean(clip);
    if (gap <= 0.0) return grad;  // hinge inactive
    double scale = -2.0 * gap / static_cast<double>(e - b);
    for (size_t i = b; i < e; ++i) {
        double s = clip.samples[i];
        grad[i] = s > 0.0 ? scale : (s < 0.0 ? -scale : 0.0);
    }
    return grad;
}

ScriptedMock::ScriptedMock(std::string id, std::vector<Rule> rules)
    : id_(std::move(id)), rules_(std::move(rules)) {
    if (rules_.empty()) fail(ErrorCode::InvalidArgument, "scripted mock needs at least one rule");
    std::sort(rules_.begin(), rules_.end(),
              [](const Rule& a, const Rule& b) { return a.min_length < b.min_length; });
}

std::string ScriptedMock::transcribe(const AudioClip& clip) const {
    check_audio(clip, "scripted transcribe");
    std::string out;
    for (const auto& rule : rules_) {
        if (clip.samples.size() >= rule.min_length) out = rule.transcript;
    }
    return normalize_transcript(out);
}

SurrogateEnsemble::SurrogateEnsemble(std::vector<std::shared_ptr<SurrogateModel>> members,
                                     uint64_t rng_seed)
    : members_(std::move(members)), rng_(rng_seed) {
    if (members_.empty()) fail(ErrorCode::InvalidArgument, "ensemble needs at least one member");
    std::set<std::string> ids;
    for (const auto& m : members_) {
        if (!m) fail(ErrorCode::InvalidArgument, "null ensemble member");
        if (!ids.insert(m->id()).second)
            fail(ErrorCode::InvalidArgument, "duplicate ensemble member id: " + m->id());
    }
}

void SurrogateEnsemble::shuffle() { rng_.shuffle(members_); }

bool validate_on_all(const SurrogateEnsemble& ensemble, const AudioClip& clip,
                     const std::string& target) {
    std::string want = normalize_transcript(target);
    for (const auto& m : ensemble.members()) {
        if (normalize_transcript(m->transcribe(clip)) != want) return false;
    }
    return true;
}

ConformanceReport run_conformance(const SurrogateModel& model, const AudioClip& probe,
                                  const std::string& target) {
    ConformanceReport report;
    auto flag = [&](const std::string& msg) {
        report.ok = false;
        report.failures.push_back(msg);
    };

    std::string t1 = model.transcribe(probe);
    std::string t2 = model.transcribe(probe);
    if (t1 != t2) flag("transcribe not deterministic");
    if (t1 != normalize_transcript(t1)) flag("transcript not normalized");

    double loss = model.adversarial_loss(probe, target);
    if (!std::isfinite(loss)) flag("adversarial_loss not finite");

    std::vector<double> grad = model.loss_gradient(probe, target);
    if (grad.size() != probe.samples.size()) flag("gradient length != clip length");
    for (double g : grad) {
        if (!std::isfinite(g)) {
            flag("gradient has non-finite entries");
            break;
        }
    }

    // Central differences on a few fixed coordinates. Tolerance is loose: it
    // guards the interface contract, not numeric quality.
    if (grad.size() == probe.samples.size() && !probe.samples.empty()) {
        const double h = 1e-5;
        size_t stride = std::max<size_t>(1, probe.samples.size() / 7);
        double num = 0.0, den = 0.0;
        for (size_t i = stride / 2; i < probe.samples.size(); i += stride) {
            AudioClip bumped = probe;
            bumped.samples[i] += h;
            double up = model.adversarial_loss(bumped, target);
            bumped.samples[i] = probe.samples[i] - h;
            double down = model.adversarial_loss(bumped, target);
            double fd = (up - down) / (2.0 * h);
            num += (grad[i] - fd) * (grad[i] - fd);
            den += fd * fd;
        }
        if (den > 1e-16 && std::sqrt(num / den) > 1e-2)
            flag("gradient disagrees with finite differences");
    }

    bool threw = false;
    try {
        model.adversarial_loss(probe, "bad#token");
    } catch (const Error& e) {
        threw = e.code() == ErrorCode::UntokenizableTarget;
    }
    if (!threw) flag("out-of-vocabulary target not rejected");

    return report;
}

}  // namespace siren
