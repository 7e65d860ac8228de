#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "siren/config_io.hpp"
#include "siren/corpus.hpp"
#include "siren/errors.hpp"
#include "siren/runner.hpp"

namespace {

// 0 ok, 2 config/usage, 3 infeasible init, 4 model error, 5 io,
// 6 attack yielded no valid example for some command, 1 anything else.
int exit_code_for(siren::ErrorCode code) {
    using EC = siren::ErrorCode;
    switch (code) {
        case EC::InvalidConfig:
        case EC::InvalidArgument:
        case EC::InvalidRate:
        case EC::PositionOutOfRange:
        case EC::LengthMismatch:
        case EC::FrameCountMismatch:
        case EC::DegenerateAudio:
        case EC::EmptyValidSet:
            return 2;
        case EC::NoFeasibleInit:
            return 3;
        case EC::AudioTooShort:
        case EC::UnsupportedSampleRate:
        case EC::UntokenizableTarget:
        case EC::NonFiniteGradient:
        case EC::NonConvergence:
            return 4;
        case EC::IoError:
            return 5;
    }
    return 1;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"siren: transferable adversarial audio against surrogate recognizer ensembles"};
    app.require_subcommand(1);

    std::string corpus_dir, carrier, command_audio, target, surrogates, out_dir;
    std::string config_path, models_dir, holdout, defenses, targets_csv, rerun_manifest;
    uint64_t seed = 0;
    int n_models = 2;
    double stride = 0.0;

    auto* make_corpus = app.add_subcommand("make-corpus", "generate the synthetic command corpus");
    make_corpus->add_option("--out", out_dir, "output directory")->required();
    make_corpus->add_option("--seed", seed, "corpus seed");

    auto* train = app.add_subcommand("train-toys", "train toy CTC surrogate recognizers");
    train->add_option("--corpus", corpus_dir, "corpus directory")->required();
    train->add_option("--models-dir", models_dir, "checkpoint directory");
    train->add_option("--count", n_models, "number of models");
    train->add_option("--seed", seed, "training seed");

    auto* init = app.add_subcommand("init", "search the initial perturbation placement and scale");
    init->add_option("--carrier", carrier)->required();
    init->add_option("--command-audio", command_audio)->required();
    init->add_option("--target", target)->required();
    init->add_option("--surrogates", surrogates, "comma-separated surrogate ids")->required();
    init->add_option("--config", config_path, "attack config json");
    init->add_option("--stride", stride, "scale search stride override");
    init->add_option("--models-dir", models_dir);
    init->add_option("--out", out_dir)->required();

    auto* attack = app.add_subcommand("attack", "run the full optimization for one command");
    attack->add_option("--carrier", carrier)->required();
    attack->add_option("--command-audio", command_audio)->required();
    attack->add_option("--target", target)->required();
    attack->add_option("--surrogates", surrogates)->required();
    attack->add_option("--config", config_path);
    attack->add_option("--models-dir", models_dir);
    attack->add_option("--out", out_dir)->required();

    auto* eval = app.add_subcommand("eval", "metrics and defense table for attack outputs");
    eval->add_option("--adv-dir", out_dir)->required();
    eval->add_option("--surrogates", surrogates)->required();
    eval->add_option("--holdout", holdout);
    eval->add_option("--defenses", defenses,
                     "e.g. smoothing:h=2,downsample:f_low=12000,td:k=0.5,mvp:m=2");
    eval->add_option("--models-dir", models_dir);

    auto* pipeline = app.add_subcommand("pipeline", "init + attack + eval for a set of commands");
    pipeline->add_option("--corpus", corpus_dir);
    pipeline->add_option("--carrier", carrier);
    pipeline->add_option("--targets", targets_csv, "comma-separated; default: whole corpus");
    pipeline->add_option("--surrogates", surrogates);
    pipeline->add_option("--config", config_path);
    pipeline->add_option("--models-dir", models_dir);
    pipeline->add_option("--holdout", holdout);
    pipeline->add_option("--defenses", defenses);
    pipeline->add_option("--rerun", rerun_manifest, "rerun from a previous manifest.json");
    pipeline->add_option("--out", out_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (models_dir.empty()) models_dir = siren::default_models_dir().string();

        if (make_corpus->parsed()) {
            siren::make_corpus(out_dir, seed);
            std::printf("corpus written to %s\n", out_dir.c_str());
            return 0;
        }

        if (train->parsed()) {
            siren::TrainToysOptions options;
            options.n_models = n_models;
            options.seed = seed;
            auto manifests = siren::cmd_train_toys(corpus_dir, models_dir, options);
            for (const auto& m : manifests) std::printf("registered %s\n", m.string().c_str());
            return 0;
        }

        siren::AttackConfig config;
        if (!config_path.empty()) config = siren::load_attack_config(config_path);
        if (stride > 0.0) config.init.stride = stride;

        siren::AdapterRegistry registry = siren::AdapterRegistry::with_builtin_loaders();
        registry.scan_dir(models_dir);

        if (init->parsed()) {
            auto res = siren::cmd_init(carrier, command_audio, target, split_csv(surrogates),
                                       registry, config, out_dir);
            std::printf("init: position=%zu mu=%.6g snr_db=%.4f\n",
                        res.perturbation.meta->position, res.perturbation.meta->scale,
                        res.snr_db);
            return 0;
        }

        if (attack->parsed()) {
            auto artifacts = siren::cmd_attack(carrier, command_audio, target,
                                               split_csv(surrogates), registry, config, out_dir);
            std::printf("attack: %zu valid examples, report at %s\n",
                        artifacts.result.valid_set.size(),
                        artifacts.report_path.string().c_str());
            return artifacts.result.valid_set.empty() ? 6 : 0;
        }

        if (eval->parsed()) {
            std::optional<std::string> holdout_id;
            if (!holdout.empty()) holdout_id = holdout;
            siren::EvalReport report =
                siren::cmd_eval(out_dir, split_csv(surrogates), holdout_id, registry,
                                siren::parse_defense_specs(defenses));
            std::printf("%s", siren::render_defense_table(report).c_str());
            std::printf("baseline sroa %s, mean snr %.2f dB\n", report.baseline_sroa.str().c_str(),
                        report.mean_snr_db);
            return 0;
        }

        if (pipeline->parsed()) {
            siren::PipelineOptions options;
            if (!rerun_manifest.empty()) {
                options = siren::pipeline_options_from_manifest(rerun_manifest, out_dir);
            } else {
                options.corpus_dir = corpus_dir;
                options.carrier_path = carrier;
                options.models_dir = models_dir;
                options.out_dir = out_dir;
                options.targets = split_csv(targets_csv);
                options.surrogate_specs = split_csv(surrogates);
                if (!holdout.empty()) options.holdout = holdout;
                options.config = config;
                options.defenses = siren::parse_defense_specs(defenses);
            }
            siren::PipelineResult result = siren::cmd_pipeline(options);
            std::printf("run %s complete, manifest at %s\n",
                        result.manifest["run_id"].get<std::string>().c_str(),
                        result.manifest_path.string().c_str());
            return result.every_command_attacked ? 0 : 6;
        }
    } catch (const siren::Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", siren::error_code_name(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
