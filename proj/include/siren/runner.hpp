#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "siren/corpus.hpp"
#include "siren/eval.hpp"
#include "siren/optimizer.hpp"
#include "siren/registry.hpp"
#include "siren/toy_ctc.hpp"

namespace siren {

// Default checkpoint/cache directory; SIREN_CACHE_DIR overrides.
std::filesystem::path default_models_dir();

struct TrainToysOptions {
    int n_models = 2;
    uint64_t seed = 0;
    ToyTrainOptions train;
};

// Trains n toy CTC recognizers on the corpus (ids toyctc-a, toyctc-b, ...),
// saves checkpoints plus adapter manifests into models_dir, and verifies
// each registered adapter against the conformance suite.
std::vector<std::filesystem::path> cmd_train_toys(const std::filesystem::path& corpus_dir,
                                                  const std::filesystem::path& models_dir,
                                                  const TrainToysOptions& options);

// Surrogate spec: a registry id, or one of the built-in mocks bound to the
// current target — "mock-accept[:name]", "mock-reject[:name]",
// "mock-threshold:<threshold>[:<window_begin>:<window_end>]".
std::vector<std::shared_ptr<SurrogateModel>> resolve_surrogates(
    const std::vector<std::string>& specs, const AdapterRegistry& registry,
    const std::string& target);

struct InitCommandResult {
    Perturbation perturbation;
    double snr_db = 0.0;
};

InitCommandResult cmd_init(const std::filesystem::path& carrier_path,
                           const std::filesystem::path& command_path, const std::string& target,
                           const std::vector<std::string>& surrogate_specs,
                           const AdapterRegistry& registry, const AttackConfig& config,
                           const std::filesystem::path& out_dir);

struct AttackArtifacts {
    AttackResult result;
    std::filesystem::path dir;
    std::filesystem::path report_path;
};

AttackArtifacts cmd_attack(const std::filesystem::path& carrier_path,
                           const std::filesystem::path& command_path, const std::string& target,
                           const std::vector<std::string>& surrogate_specs,
                           const AdapterRegistry& registry, const AttackConfig& config,
                           const std::filesystem::path& out_dir);

// Evaluates one attack directory or a pipeline run directory holding several;
// writes eval_report.json and eval_table.txt next to the inputs.
EvalReport cmd_eval(const std::filesystem::path& adv_dir,
                    const std::vector<std::string>& surrogate_specs,
                    const std::optional<std::string>& holdout_id, const AdapterRegistry& registry,
                    const DefenseConfig& defenses);

struct PipelineOptions {
    std::filesystem::path corpus_dir;
    std::filesystem::path carrier_path;
    std::filesystem::path models_dir;
    std::filesystem::path out_dir;
    std::vector<std::string> targets;  // empty = every corpus command
    std::vector<std::string> surrogate_specs;
    std::optional<std::string> holdout;
    AttackConfig config;
    DefenseConfig defenses;
};

struct PipelineResult {
    nlohmann::json manifest;
    std::filesystem::path manifest_path;
    bool every_command_attacked = false;  // non-empty valid set for each target
};

PipelineResult cmd_pipeline(const PipelineOptions& options);

// Rebuilds PipelineOptions from a previously written manifest (inputs must
// still be present); the rerun writes into out_dir.
PipelineOptions pipeline_options_from_manifest(const std::filesystem::path& manifest_path,
                                               const std::filesystem::path& out_dir);

DefenseConfig parse_defense_specs(const std::string& spec);

}  // namespace siren
