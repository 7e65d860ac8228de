#include "siren/runner.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "siren/config_io.hpp"
#include "siren/sha256.hpp"
#include "siren/text.hpp"
#include "siren/toy_ctc.hpp"
#include "siren/wav_io.hpp"

namespace siren {

namespace {

std::string slugify(const std::string& text) {
    std::string slug;
    for (char c : normalize_transcript(text)) slug.push_back(c == ' ' ? '_' : c);
    return slug;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(ErrorCode::IoError, "cannot write " + path.string());
    f << j.dump(2) << "\n";
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::IoError, "cannot read " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::IoError, path.string() + ": " + e.what());
    }
    return j;
}

AudioClip load_normalized(const std::filesystem::path& path) {
    return normalize(read_wav(path));
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

nlohmann::json defenses_to_json(const DefenseConfig& d) {
    return {{"smoothing_h", d.smoothing_h},
            {"downsample_rates", d.downsample_rates},
            {"td_ratios", d.td_ratios},
            {"td_threshold", d.td_threshold},
            {"mvp_m", d.mvp_m},
            {"smoothing_use_mean", d.smoothing_use_mean}};
}

DefenseConfig defenses_from_json(const nlohmann::json& j) {
    DefenseConfig d;
    d.smoothing_h = j.at("smoothing_h").get<std::vector<int>>();
    d.downsample_rates = j.at("downsample_rates").get<std::vector<int>>();
    d.td_ratios = j.at("td_ratios").get<std::vector<double>>();
    d.td_threshold = j.at("td_threshold").get<double>();
    d.mvp_m = j.at("mvp_m").get<std::vector<int>>();
    d.smoothing_use_mean = j.at("smoothing_use_mean").get<bool>();
    return d;
}

}  // namespace

std::filesystem::path default_models_dir() {
    if (const char* env = std::getenv("SIREN_CACHE_DIR")) return std::filesystem::path(env);
    return std::filesystem::path("siren_cache");
}

std::vector<std::filesystem::path> cmd_train_toys(const std::filesystem::path& corpus_dir,
                                                  const std::filesystem::path& models_dir,
                                                  const TrainToysOptions& options) {
    if (options.n_models < 1) fail(ErrorCode::InvalidConfig, "need at least one model");
    CorpusIndex corpus = load_corpus(corpus_dir);

    std::vector<LabeledClip> training;
    for (const auto& [text, wav] : corpus.commands)
        training.push_back({load_normalized(wav), text});

    ToyTrainOptions train = options.train;
    if (train.backgrounds.empty())
        for (const auto& carrier : corpus.carriers)
            train.backgrounds.push_back(load_normalized(carrier));

    std::error_code ec;
    std::filesystem::create_directories(models_dir, ec);

    std::vector<std::filesystem::path> manifests;
    for (int i = 0; i < options.n_models; ++i) {
        std::string id = "toyctc-";
        id.push_back(static_cast<char>('a' + i));
        SeededRng stream = SeededRng::substream(options.seed, "training:" + id);

        ToyCtcModel model(id, ToyCtcConfig{}, stream.next_u64());
        train_toy_ctc(model, training, train, stream);

        std::filesystem::path ckpt = models_dir / (id + ".ckpt.json");
        model.save(ckpt);

        AdapterManifest manifest;
        manifest.id = id;
        manifest.category = model.category();
        manifest.decoder_kind = model.decoder_kind();
        manifest.sample_rate = model.sample_rate();
        manifest.checkpoint = ckpt;
        std::filesystem::path mpath = models_dir / (id + ".manifest.json");
        write_adapter_manifest(mpath, manifest);

        // The registered adapter must satisfy the interface contract.
        auto loaded = AdapterRegistry::with_builtin_loaders();
        loaded.add(read_adapter_manifest(mpath));
        auto reloaded = loaded.load(id);
        ConformanceReport conf = run_conformance(*reloaded, training.front().audio,
                                                 training.front().text);
        if (!conf.ok) {
            std::string msg = id + " failed conformance:";
            for (const auto& failure : conf.failures) msg += " " + failure + ";";
            fail(ErrorCode::NonConvergence, msg);
        }
        manifests.push_back(mpath);
    }
    return manifests;
}

std::vector<std::shared_ptr<SurrogateModel>> resolve_surrogates(
    const std::vector<std::string>& specs, const AdapterRegistry& registry,
    const std::string& target) {
    if (specs.empty()) fail(ErrorCode::InvalidConfig, "no surrogates requested");
    std::vector<std::shared_ptr<SurrogateModel>> out;
    for (const auto& spec : specs) {
        if (spec.rfind("mock-accept", 0) == 0) {
            out.push_back(ThresholdMock::always_accept(spec, target));
        } else if (spec.rfind("mock-reject", 0) == 0) {
            out.push_back(ThresholdMock::always_reject(spec));
        } else if (spec.rfind("mock-threshold:", 0) == 0) {
            auto parts = split_list(spec.substr(15), ':');
            if (parts.empty())
                fail(ErrorCode::InvalidConfig, "mock-threshold needs a threshold value");
            double threshold = std::stod(parts[0]);
            size_t begin = parts.size() > 1 ? std::stoull(parts[1]) : 0;
            size_t end = parts.size() > 2 ? std::stoull(parts[2])
                                          : std::numeric_limits<size_t>::max();
            out.push_back(std::make_shared<ThresholdMock>(spec, target, threshold, begin, end));
        } else {
            out.push_back(registry.load(spec));
        }
    }
    return out;
}

InitCommandResult cmd_init(const std::filesystem::path& carrier_path,
                           const std::filesystem::path& command_path, const std::string& target,
                           const std::vector<std::string>& surrogate_specs,
                           const AdapterRegistry& registry, const AttackConfig& config,
                           const std::filesystem::path& out_dir) {
    AudioClip carrier = load_normalized(carrier_path);
    AudioClip command = load_normalized(command_path);
    SurrogateEnsemble ensemble(resolve_surrogates(surrogate_specs, registry, target),
                               SeededRng::substream(config.seed, "shuffle").next_u64());

    InitCommandResult res;
    res.perturbation = ada_search(carrier, target, command, ensemble, config.init);
    res.snr_db = snr_db(carrier, res.perturbation.delta);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    AudioClip delta_clip;
    delta_clip.sample_rate = carrier.sample_rate;
    delta_clip.samples = res.perturbation.delta;
    write_wav(out_dir / "init.wav", delta_clip);

    nlohmann::json j;
    j["position"] = res.perturbation.meta->position;
    j["mu"] = res.perturbation.meta->scale;
    j["snr_db"] = res.snr_db;
    write_json_file(out_dir / "init.json", j);
    return res;
}

AttackArtifacts cmd_attack(const std::filesystem::path& carrier_path,
                           const std::filesystem::path& command_path, const std::string& target,
                           const std::vector<std::string>& surrogate_specs,
                           const AdapterRegistry& registry, const AttackConfig& config,
                           const std::filesystem::path& out_dir) {
    AudioClip carrier = load_normalized(carrier_path);
    AudioClip command = load_normalized(command_path);
    SurrogateEnsemble ensemble(resolve_surrogates(surrogate_specs, registry, target),
                               SeededRng::substream(config.seed, "shuffle").next_u64());

    AttackResult result = run_attack(carrier, target, command, ensemble, config);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);

    AttackArtifacts artifacts;
    artifacts.dir = out_dir;

    nlohmann::json examples = nlohmann::json::array();
    for (const auto& ex : result.valid_set) {
        std::string name = "adv_" + std::to_string(ex.step) + ".wav";
        write_wav(out_dir / name, ex.audio);
        examples.push_back({{"step", ex.step},
                            {"snr_db", ex.snr_db},
                            {"file", name},
                            {"valid_after_quantization", ex.valid_after_quantization}});
    }

    AudioClip final_delta;
    final_delta.sample_rate = carrier.sample_rate;
    final_delta.samples = result.final_delta.delta;
    write_wav(out_dir / "final_delta.wav", final_delta);

    std::ofstream trace(out_dir / "trace.jsonl", std::ios::trunc);
    if (!trace) fail(ErrorCode::IoError, "cannot write trace.jsonl");
    for (const auto& step : result.trace) {
        nlohmann::json line;
        line["step"] = step.step;
        line["valid"] = step.valid;
        line["losses"] = nlohmann::json::array();
        for (const auto& rec : step.losses)
            line["losses"].push_back({{"model", rec.model_id},
                                      {"total", rec.loss.total},
                                      {"adversarial", rec.loss.adversarial},
                                      {"imperceptibility", rec.loss.imperceptibility},
                                      {"acoustic_feature", rec.loss.acoustic_feature}});
        trace << line.dump() << "\n";
    }

    nlohmann::json report;
    report["schema_version"] = 1;
    report["target"] = target;
    report["carrier"] = {{"path", carrier_path.string()}, {"sha256", sha256_file(carrier_path)}};
    report["command_audio"] = {{"path", command_path.string()},
                               {"sha256", sha256_file(command_path)}};
    report["surrogates"] = surrogate_specs;
    report["config"] = attack_config_to_json(config);
    report["init"] = {{"position", result.init.position}, {"mu", result.init.scale}};
    report["valid_examples"] = examples;
    report["final_delta"] = {{"file", "final_delta.wav"},
                             {"snr_db", snr_db(carrier, result.final_delta.delta)}};
    artifacts.report_path = out_dir / "report.json";
    write_json_file(artifacts.report_path, report);

    artifacts.result = std::move(result);
    return artifacts;
}

namespace {

// An attack directory holds report.json; a run directory holds several
// attack directories one level down.
std::vector<std::filesystem::path> find_attack_dirs(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> dirs;
    if (std::filesystem::exists(root / "report.json")) {
        dirs.push_back(root);
        return dirs;
    }
    if (std::filesystem::is_directory(root)) {
        for (const auto& entry : std::filesystem::directory_iterator(root)) {
            if (entry.is_directory() && std::filesystem::exists(entry.path() / "report.json"))
                dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

}  // namespace

EvalReport cmd_eval(const std::filesystem::path& adv_dir,
                    const std::vector<std::string>& surrogate_specs,
                    const std::optional<std::string>& holdout_id, const AdapterRegistry& registry,
                    const DefenseConfig& defenses) {
    std::vector<std::filesystem::path> dirs = find_attack_dirs(adv_dir);
    if (dirs.empty()) fail(ErrorCode::IoError, "no attack reports under " + adv_dir.string());

    std::vector<CommandExamples> commands;
    std::vector<double> best_snrs;
    std::string first_target;
    for (const auto& dir : dirs) {
        nlohmann::json report = read_json_file(dir / "report.json");
        CommandExamples cmd;
        cmd.target = report.at("target").get<std::string>();
        if (first_target.empty()) first_target = cmd.target;
        double best = 0.0;
        for (const auto& ex : report.at("valid_examples")) {
            cmd.examples.push_back(read_wav(dir / ex.at("file").get<std::string>()));
            best = std::max(best, ex.at("snr_db").get<double>());
        }
        commands.push_back(std::move(cmd));
        best_snrs.push_back(best);
    }

    auto checkers = resolve_surrogates(surrogate_specs, registry, first_target);
    EvalReport report = evaluate_attack(commands, checkers, best_snrs, defenses);

    nlohmann::json j;
    j["schema_version"] = 1;
    j["targets"] = nlohmann::json::array();
    for (const auto& cmd : commands) j["targets"].push_back(cmd.target);
    j["checkers"] = surrogate_specs;
    j["baseline_sroa"] = report.baseline_sroa.str();
    j["mean_snr_db"] = report.mean_snr_db;
    j["transfer_rates"] = report.transfer_rates;

    if (holdout_id) {
        auto holdout = resolve_surrogates({*holdout_id}, registry, first_target).front();
        nlohmann::json per_command = nlohmann::json::object();
        for (const auto& cmd : commands) {
            if (cmd.examples.empty()) continue;
            per_command[cmd.target] = transfer_rate(cmd.examples, *holdout, cmd.target);
        }
        j["holdout"] = *holdout_id;
        j["holdout_transfer_rate"] = per_command;
    }

    j["defenses"] = nlohmann::json::array();
    for (const auto& cell : report.defense_table)
        j["defenses"].push_back({{"defense", cell.defense},
                                 {"setting", cell.setting},
                                 {"sroa", cell.per_command_sroa.str()},
                                 {"example_survival", cell.per_example_survival}});

    write_json_file(adv_dir / "eval_report.json", j);
    std::ofstream table(adv_dir / "eval_table.txt", std::ios::trunc);
    table << render_defense_table(report);
    return report;
}

PipelineResult cmd_pipeline(const PipelineOptions& options) {
    CorpusIndex corpus = load_corpus(options.corpus_dir);
    std::vector<std::string> targets = options.targets;
    if (targets.empty())
        for (const auto& [text, _] : corpus.commands) targets.push_back(text);

    AdapterRegistry registry = AdapterRegistry::with_builtin_loaders();
    registry.scan_dir(options.models_dir);

    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);

    nlohmann::json inputs;
    inputs["carrier"] = {{"path", options.carrier_path.string()},
                         {"sha256", sha256_file(options.carrier_path)}};
    inputs["corpus_dir"] = options.corpus_dir.string();
    inputs["models_dir"] = options.models_dir.string();
    nlohmann::json input_commands = nlohmann::json::array();

    bool all_attacked = true;
    std::vector<std::string> artifacts;
    for (const auto& target : targets) {
        auto found = std::find_if(corpus.commands.begin(), corpus.commands.end(),
                                  [&](const auto& p) {
                                      return normalize_transcript(p.first) ==
                                             normalize_transcript(target);
                                  });
        if (found == corpus.commands.end())
            fail(ErrorCode::InvalidConfig, "target not in corpus: " + target);

        input_commands.push_back({{"text", target},
                                  {"path", found->second.string()},
                                  {"sha256", sha256_file(found->second)}});

        std::filesystem::path cmd_dir = options.out_dir / slugify(target);
        AttackArtifacts attack = cmd_attack(options.carrier_path, found->second, target,
                                            options.surrogate_specs, registry,
                                            options.config, cmd_dir);
        if (attack.result.valid_set.empty()) all_attacked = false;

        std::string rel = slugify(target) + "/";
        artifacts.push_back(rel + "report.json");
        artifacts.push_back(rel + "trace.jsonl");
        artifacts.push_back(rel + "final_delta.wav");
        for (const auto& ex : attack.result.valid_set)
            artifacts.push_back(rel + "adv_" + std::to_string(ex.step) + ".wav");
    }
    inputs["commands"] = input_commands;

    cmd_eval(options.out_dir, options.surrogate_specs, options.holdout, registry,
             options.defenses);
    artifacts.push_back("eval_report.json");
    artifacts.push_back("eval_table.txt");

    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    manifest["targets"] = targets;
    manifest["surrogates"] = options.surrogate_specs;
    if (options.holdout) manifest["holdout"] = *options.holdout;
    manifest["config"] = attack_config_to_json(options.config);
    manifest["defenses"] = defenses_to_json(options.defenses);
    manifest["inputs"] = inputs;
    manifest["artifacts"] = artifacts;

    // The id pins everything that determines the outputs; the timestamp is
    // informational and excluded.
    manifest["run_id"] = Sha256::of_string(manifest.dump()).substr(0, 12);
    manifest["created_at"] = utc_timestamp();

    PipelineResult result;
    result.manifest = manifest;
    result.manifest_path = options.out_dir / "manifest.json";
    result.every_command_attacked = all_attacked;
    write_json_file(result.manifest_path, manifest);
    return result;
}

PipelineOptions pipeline_options_from_manifest(const std::filesystem::path& manifest_path,
                                               const std::filesystem::path& out_dir) {
    nlohmann::json manifest = read_json_file(manifest_path);
    PipelineOptions options;
    options.out_dir = out_dir;
    options.corpus_dir = manifest.at("inputs").at("corpus_dir").get<std::string>();
    options.models_dir = manifest.at("inputs").at("models_dir").get<std::string>();
    options.carrier_path = manifest.at("inputs").at("carrier").at("path").get<std::string>();
    options.targets = manifest.at("targets").get<std::vector<std::string>>();
    options.surrogate_specs = manifest.at("surrogates").get<std::vector<std::string>>();
    if (manifest.contains("holdout")) options.holdout = manifest["holdout"].get<std::string>();
    options.config = attack_config_from_json(manifest.at("config"));
    options.defenses = defenses_from_json(manifest.at("defenses"));
    return options;
}

DefenseConfig parse_defense_specs(const std::string& spec) {
    DefenseConfig config;
    if (spec.empty()) return config;
    config.smoothing_h.clear();
    config.downsample_rates.clear();
    config.td_ratios.clear();
    config.mvp_m.clear();

    for (const auto& item : split_list(spec, ',')) {
        auto parts = split_list(item, ':');
        if (parts.size() != 2) fail(ErrorCode::InvalidConfig, "bad defense spec: " + item);
        auto kv = split_list(parts[1], '=');
        if (kv.size() != 2) fail(ErrorCode::InvalidConfig, "bad defense setting: " + parts[1]);
        const std::string& name = parts[0];
        const std::string& value = kv[1];
        if (name == "smoothing" && kv[0] == "h") {
            config.smoothing_h.push_back(std::stoi(value));
        } else if (name == "downsample" && kv[0] == "f_low") {
            config.downsample_rates.push_back(std::stoi(value));
        } else if (name == "td" && kv[0] == "k") {
            config.td_ratios.push_back(std::stod(value));
        } else if (name == "mvp" && kv[0] == "m") {
            config.mvp_m.push_back(std::stoi(value));
        } else {
            fail(ErrorCode::InvalidConfig, "unknown defense spec: " + item);
        }
    }
    return config;
}

}  // namespace siren
