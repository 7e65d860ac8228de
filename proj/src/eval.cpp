#include "siren/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "siren/resample.hpp"
#include "siren/text.hpp"

namespace siren {

Rational sroa(const std::vector<bool>& outcomes) {
    if (outcomes.empty()) fail(ErrorCode::InvalidArgument, "sroa: empty outcome list");
    long hits = static_cast<long>(std::count(outcomes.begin(), outcomes.end(), true));
    return {hits, static_cast<long>(outcomes.size())};
}

double transfer_rate(const std::vector<AudioClip>& valid_set, const SurrogateModel& model,
                     const std::string& target) {
    if (valid_set.empty()) fail(ErrorCode::EmptyValidSet, "transfer_rate: empty valid set");
    std::string want = normalize_transcript(target);
    size_t hits = 0;
    for (const auto& clip : valid_set)
        if (normalize_transcript(model.transcribe(clip)) == want) ++hits;
    return static_cast<double>(hits) / static_cast<double>(valid_set.size());
}

double word_error_rate(const std::string& hyp, const std::string& ref) {
    std::vector<std::string> r = split_words(normalize_transcript(ref));
    if (r.empty()) fail(ErrorCode::InvalidArgument, "word_error_rate: empty reference");
    std::vector<std::string> h = split_words(normalize_transcript(hyp));

    std::vector<size_t> prev(r.size() + 1), cur(r.size() + 1);
    for (size_t j = 0; j <= r.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= h.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= r.size(); ++j) {
            size_t sub = prev[j - 1] + (h[i - 1] == r[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[r.size()]) / static_cast<double>(r.size());
}

AudioClip local_smoothing(const AudioClip& clip, int h, bool use_mean) {
    check_audio(clip, "local_smoothing");
    if (h < 1) fail(ErrorCode::InvalidArgument, "local_smoothing: h must be >= 1");

    const auto& in = clip.samples;
    const size_t n = in.size();
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.samples.resize(n);

    std::vector<double> window;
    window.reserve(2 * h + 1);
    for (size_t i = 0; i < n; ++i) {
        size_t radius = std::min<size_t>(h, std::min(i, n - 1 - i));
        size_t lo = i - radius, hi = i + radius;
        if (use_mean) {
            double acc = 0.0;
            for (size_t j = lo; j <= hi; ++j) acc += in[j];
            out.samples[i] = acc / static_cast<double>(hi - lo + 1);
        } else {
            window.assign(in.begin() + lo, in.begin() + hi + 1);
            std::nth_element(window.begin(), window.begin() + radius, window.end());
            out.samples[i] = window[radius];
        }
    }
    return out;
}

AudioClip downsample_defense(const AudioClip& clip, int f_low) {
    check_audio(clip, "downsample_defense");
    if (f_low <= 0 || f_low >= clip.sample_rate)
        fail(ErrorCode::InvalidRate, "downsample_defense: need 0 < f_low < sample rate");
    AudioClip restored = resample(resample(clip, f_low), clip.sample_rate);
    restored.samples.resize(clip.samples.size(), 0.0);  // pad/truncate to exact length
    return restored;
}

TemporalDependencyResult temporal_dependency_check(const AudioClip& clip,
                                                   const SurrogateModel& model, double k,
                                                   double threshold) {
    check_audio(clip, "temporal_dependency_check");
    if (!(k > 0.0) || !(k < 1.0))
        fail(ErrorCode::InvalidArgument, "temporal_dependency_check: k must lie in (0, 1)");

    size_t head_len = static_cast<size_t>(std::floor(k * static_cast<double>(clip.samples.size())));
    if (head_len == 0) fail(ErrorCode::AudioTooShort, "temporal_dependency_check: empty prefix");
    AudioClip head;
    head.sample_rate = clip.sample_rate;
    head.samples.assign(clip.samples.begin(), clip.samples.begin() + head_len);

    TemporalDependencyResult res;
    res.head_transcript = normalize_transcript(model.transcribe(head));
    res.full_transcript = normalize_transcript(model.transcribe(clip));

    std::vector<std::string> full_words = split_words(res.full_transcript);
    size_t n_prefix = static_cast<size_t>(std::ceil(k * static_cast<double>(full_words.size())));
    std::string prefix;
    for (size_t i = 0; i < n_prefix && i < full_words.size(); ++i) {
        if (!prefix.empty()) prefix.push_back(' ');
        prefix += full_words[i];
    }
    res.prefix_transcript = prefix;

    if (prefix.empty()) {
        res.score = res.head_transcript.empty() ? 1.0 : 0.0;
    } else {
        res.score = std::max(0.0, 1.0 - word_error_rate(res.head_transcript, prefix));
    }
    res.adversarial = res.score < threshold;
    return res;
}

MvpEarsResult mvp_ears_check(const AudioClip& clip,
                             const std::vector<std::shared_ptr<SurrogateModel>>& models) {
    check_audio(clip, "mvp_ears_check");
    if (models.size() < 2)
        fail(ErrorCode::InvalidArgument, "mvp_ears_check: needs at least two recognizers");
    MvpEarsResult res;
    for (const auto& m : models) res.transcripts.push_back(normalize_transcript(m->transcribe(clip)));
    res.agreement = std::all_of(res.transcripts.begin(), res.transcripts.end(),
                                [&](const std::string& t) { return t == res.transcripts[0]; });
    return res;
}

namespace {

bool accepted_by_all(const AudioClip& clip,
                     const std::vector<std::shared_ptr<SurrogateModel>>& checkers,
                     const std::string& want) {
    for (const auto& m : checkers)
        if (normalize_transcript(m->transcribe(clip)) != want) return false;
    return true;
}

DefenseCell tally(const std::string& defense, const std::string& setting,
                  const std::vector<std::vector<bool>>& per_command_survivals) {
    DefenseCell cell;
    cell.defense = defense;
    cell.setting = setting;
    std::vector<bool> command_hit;
    size_t survived = 0, total = 0;
    for (const auto& survivals : per_command_survivals) {
        command_hit.push_back(std::any_of(survivals.begin(), survivals.end(),
                                          [](bool b) { return b; }));
        survived += static_cast<size_t>(std::count(survivals.begin(), survivals.end(), true));
        total += survivals.size();
    }
    cell.per_command_sroa = sroa(command_hit);
    cell.per_example_survival = total == 0 ? 0.0 : static_cast<double>(survived) / total;
    return cell;
}

}  // namespace

EvalReport evaluate_attack(const std::vector<CommandExamples>& commands,
                           const std::vector<std::shared_ptr<SurrogateModel>>& checkers,
                           const std::vector<double>& per_command_best_snr,
                           const DefenseConfig& defenses) {
    if (commands.empty()) fail(ErrorCode::InvalidArgument, "evaluate_attack: no commands");
    if (checkers.empty()) fail(ErrorCode::InvalidArgument, "evaluate_attack: no checker models");

    EvalReport report;

    std::vector<bool> baseline;
    double snr_sum = 0.0;
    size_t snr_count = 0;
    for (size_t c = 0; c < commands.size(); ++c) {
        std::string want = normalize_transcript(commands[c].target);
        bool any = false;
        for (const auto& ex : commands[c].examples)
            if (accepted_by_all(ex, checkers, want)) {
                any = true;
                break;
            }
        baseline.push_back(any);
        if (any && c < per_command_best_snr.size()) {
            snr_sum += per_command_best_snr[c];
            ++snr_count;
        }
    }
    report.baseline_sroa = sroa(baseline);
    report.mean_snr_db = snr_count == 0 ? 0.0 : snr_sum / static_cast<double>(snr_count);

    for (const auto& checker : checkers) {
        size_t hits = 0, total = 0;
        for (const auto& cmd : commands) {
            std::string want = normalize_transcript(cmd.target);
            for (const auto& ex : cmd.examples) {
                if (normalize_transcript(checker->transcribe(ex)) == want) ++hits;
                ++total;
            }
        }
        report.transfer_rates[checker->id()] =
            total == 0 ? 0.0 : static_cast<double>(hits) / total;
    }

    auto run_transform = [&](const std::string& name, const std::string& setting,
                             auto&& transform) {
        std::vector<std::vector<bool>> survivals;
        for (const auto& cmd : commands) {
            std::string want = normalize_transcript(cmd.target);
            std::vector<bool> row;
            for (const auto& ex : cmd.examples)
                row.push_back(accepted_by_all(transform(ex), checkers, want));
            survivals.push_back(std::move(row));
        }
        report.defense_table.push_back(tally(name, setting, survivals));
    };

    for (int h : defenses.smoothing_h) {
        run_transform("smoothing", "h=" + std::to_string(h), [&](const AudioClip& clip) {
            return local_smoothing(clip, h, defenses.smoothing_use_mean);
        });
    }
    for (int rate : defenses.downsample_rates) {
        run_transform("downsample", "f_low=" + std::to_string(rate),
                      [&](const AudioClip& clip) { return downsample_defense(clip, rate); });
    }

    // Temporal dependency: an attack survives when the first checker keeps a
    // consistent prefix transcript and the full transcript is the target.
    for (double k : defenses.td_ratios) {
        std::vector<std::vector<bool>> survivals;
        for (const auto& cmd : commands) {
            std::string want = normalize_transcript(cmd.target);
            std::vector<bool> row;
            for (const auto& ex : cmd.examples) {
                TemporalDependencyResult td =
                    temporal_dependency_check(ex, *checkers.front(), k, defenses.td_threshold);
                row.push_back(!td.adversarial && td.full_transcript == want);
            }
            survivals.push_back(std::move(row));
        }
        std::ostringstream setting;
        setting << "k=" << k;
        report.defense_table.push_back(tally("td", setting.str(), survivals));
    }

    // MVP: survives when the first m checkers agree on exactly the target.
    for (int m : defenses.mvp_m) {
        if (m < 2 || static_cast<size_t>(m) > checkers.size()) continue;
        std::vector<std::shared_ptr<SurrogateModel>> panel(checkers.begin(),
                                                           checkers.begin() + m);
        std::vector<std::vector<bool>> survivals;
        for (const auto& cmd : commands) {
            std::string want = normalize_transcript(cmd.target);
            std::vector<bool> row;
            for (const auto& ex : cmd.examples) {
                MvpEarsResult mvp = mvp_ears_check(ex, panel);
                row.push_back(mvp.agreement && mvp.transcripts[0] == want);
            }
            survivals.push_back(std::move(row));
        }
        report.defense_table.push_back(tally("mvp", "m=" + std::to_string(m), survivals));
    }

    return report;
}

std::string render_defense_table(const EvalReport& report) {
    std::ostringstream out;
    out << "defense      setting        sroa      example-survival\n";
    out << "-----------  -------------  --------  ----------------\n";
    char line[128];
    for (const auto& cell : report.defense_table) {
        std::snprintf(line, sizeof(line), "%-11s  %-13s  %-8s  %.3f\n", cell.defense.c_str(),
                      cell.setting.c_str(), cell.per_command_sroa.str().c_str(),
                      cell.per_example_survival);
        out << line;
    }
    return out.str();
}

}  // namespace siren
