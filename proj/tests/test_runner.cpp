#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "siren/config_io.hpp"
#include "siren/corpus.hpp"
#include "siren/runner.hpp"
#include "siren/wav_io.hpp"
#include "helpers.hpp"

using namespace siren;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("corpus generation is deterministic and complete") {
    fs::path dir_a = fresh_dir("siren_corpus_a");
    fs::path dir_b = fresh_dir("siren_corpus_b");
    CorpusIndex a = make_corpus(dir_a, 42);
    CorpusIndex b = make_corpus(dir_b, 42);

    REQUIRE(a.commands.size() == 10);
    bool has_play_music = false;
    for (const auto& [text, wav] : a.commands) {
        if (text == "play music") has_play_music = true;
        AudioClip clip = read_wav(wav);
        CHECK(clip.sample_rate == 16000);
        CHECK(clip.samples.size() > 0);
    }
    CHECK(has_play_music);

    for (size_t i = 0; i < a.commands.size(); ++i)
        CHECK(file_bytes(a.commands[i].second) == file_bytes(b.commands[i].second));
    CHECK(file_bytes(dir_a / "labels.json") == file_bytes(dir_b / "labels.json"));

    CorpusIndex loaded = load_corpus(dir_a);
    CHECK(loaded.commands.size() == 10);
    CHECK(loaded.carriers.size() == 2);

    CorpusIndex c = make_corpus(fresh_dir("siren_corpus_c"), 43);
    CHECK(file_bytes(a.commands[0].second) != file_bytes(c.commands[0].second));

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("attack config json round trip and unknown-key rejection") {
    AttackConfig config;
    config.alpha = 0.01;
    config.epsilon = 0.3;
    config.eta = 0.6;
    config.max_steps = 17;
    config.seed = 99;
    config.weights = {0.2, 0.02};
    config.init.stride = 0.1;
    config.mfcc.n_mels = 40;

    nlohmann::json j = attack_config_to_json(config);
    AttackConfig back = attack_config_from_json(j);
    CHECK(back.alpha == config.alpha);
    CHECK(back.epsilon == config.epsilon);
    CHECK(back.eta == config.eta);
    CHECK(back.max_steps == config.max_steps);
    CHECK(back.seed == config.seed);
    CHECK(back.weights.c1 == config.weights.c1);
    CHECK(back.init.stride == config.init.stride);
    CHECK(back.mfcc.n_mels == config.mfcc.n_mels);
    CHECK(attack_config_to_json(back) == j);

    nlohmann::json bad = j;
    bad["learning_rate"] = 0.1;
    CHECK_THROWS_AS(attack_config_from_json(bad), Error);

    nlohmann::json bad_nested = j;
    bad_nested["weights"]["c3"] = 1.0;
    CHECK_THROWS_AS(attack_config_from_json(bad_nested), Error);

    nlohmann::json bad_value = j;
    bad_value["eta"] = 1.5;
    CHECK_THROWS_AS(attack_config_from_json(bad_value), Error);
}

TEST_CASE("adapter manifests round trip through the registry") {
    fs::path dir = fresh_dir("siren_registry");
    AdapterManifest manifest;
    manifest.id = "mock-x";
    manifest.category = ModelCategory::Mock;
    manifest.decoder_kind = DecoderKind::ThresholdMock;
    manifest.sample_rate = 16000;
    manifest.params = {{"text", "play music"}, {"threshold", 0.0}};
    write_adapter_manifest(dir / "mock-x.manifest.json", manifest);

    AdapterRegistry registry = AdapterRegistry::with_builtin_loaders();
    registry.scan_dir(dir);
    REQUIRE(registry.has("mock-x"));
    auto model = registry.load("mock-x");
    CHECK(model->id() == "mock-x");
    CHECK(model->transcribe(testutil::noise_clip(100, 1, 0.1)) == "play music");

    CHECK_THROWS_AS(registry.load("missing"), Error);
    fs::remove_all(dir);
}

TEST_CASE("transducer manifests are declared but have no in-repo loader") {
    AdapterRegistry registry = AdapterRegistry::with_builtin_loaders();
    AdapterManifest manifest;
    manifest.id = "ext-transducer";
    manifest.decoder_kind = DecoderKind::Transducer;
    registry.add(manifest);
    CHECK_THROWS_WITH_AS(registry.load("ext-transducer"), doctest::Contains("no loader"), Error);
}

TEST_CASE("defense spec parsing") {
    DefenseConfig d = parse_defense_specs("smoothing:h=2,downsample:f_low=12000,td:k=0.5,mvp:m=2");
    CHECK(d.smoothing_h == std::vector<int>{2});
    CHECK(d.downsample_rates == std::vector<int>{12000});
    CHECK(d.td_ratios == std::vector<double>{0.5});
    CHECK(d.mvp_m == std::vector<int>{2});
    CHECK_THROWS_AS(parse_defense_specs("bogus:h=1"), Error);
}

TEST_CASE("mock surrogate specs bind the current target") {
    AdapterRegistry registry = AdapterRegistry::with_builtin_loaders();
    auto models = resolve_surrogates({"mock-accept", "mock-reject:r"}, registry, "open the door");
    AudioClip clip = testutil::noise_clip(500, 2, 0.1);
    CHECK(models[0]->transcribe(clip) == "open the door");
    CHECK(models[1]->transcribe(clip).empty());
    CHECK_THROWS_AS(resolve_surrogates({"unknown-id"}, registry, "x"), Error);
}

TEST_CASE("pipeline with always-accepting mocks produces one example per step") {
    fs::path corpus_dir = fresh_dir("siren_pipe_corpus");
    make_corpus(corpus_dir, 7);
    fs::path out_dir = fresh_dir("siren_pipe_out");

    PipelineOptions options;
    options.corpus_dir = corpus_dir;
    options.carrier_path = corpus_dir / "carriers" / "song_0.wav";
    options.models_dir = fresh_dir("siren_pipe_models");
    options.out_dir = out_dir;
    options.targets = {"play music", "open the door"};
    options.surrogate_specs = {"mock-accept"};
    options.config.max_steps = 3;
    options.config.weights = {0.01, 0.0};
    options.config.init.position_stride = 4000;
    options.defenses.smoothing_h = {1};
    options.defenses.downsample_rates = {};
    options.defenses.td_ratios = {};
    options.defenses.mvp_m = {};

    PipelineResult result = cmd_pipeline(options);
    CHECK(result.every_command_attacked);

    nlohmann::json report;
    std::ifstream rf(out_dir / "play_music" / "report.json");
    REQUIRE(rf);
    rf >> report;
    CHECK(report.at("valid_examples").size() == 3);
    CHECK(report.at("target") == "play music");
    CHECK(fs::exists(out_dir / "play_music" / "adv_1.wav"));
    CHECK(fs::exists(out_dir / "eval_report.json"));
    CHECK(fs::exists(out_dir / "manifest.json"));

    // every artifact the manifest lists exists on disk, and every attack
    // output on disk is listed by exactly this manifest
    std::set<std::string> listed;
    for (const auto& a : result.manifest.at("artifacts")) {
        listed.insert(a.get<std::string>());
        CHECK(fs::exists(out_dir / a.get<std::string>()));
    }
    for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), out_dir).generic_string();
        if (rel == "manifest.json") continue;  // the manifest itself
        CHECK_MESSAGE(listed.count(rel) == 1, rel);
    }

    fs::remove_all(corpus_dir);
    fs::remove_all(out_dir);
    fs::remove_all(options.models_dir);
}

TEST_CASE("pipeline reruns are byte-identical") {
    fs::path corpus_dir = fresh_dir("siren_det_corpus");
    make_corpus(corpus_dir, 11);

    PipelineOptions options;
    options.corpus_dir = corpus_dir;
    options.carrier_path = corpus_dir / "carriers" / "song_1.wav";
    options.models_dir = fresh_dir("siren_det_models");
    options.targets = {"send a text"};
    options.surrogate_specs = {"mock-threshold:0.02:0:8000", "mock-accept"};
    options.config.max_steps = 4;
    options.config.alpha = 0.05;
    options.config.sigma_std = 0.01;
    options.config.seed = 31;
    options.config.weights = {0.05, 0.01};
    options.config.init.position_stride = 2000;
    options.defenses = DefenseConfig{{1}, {}, {}, 0.5, {2}};

    fs::path out_a = fresh_dir("siren_det_a");
    options.out_dir = out_a;
    PipelineResult ra = cmd_pipeline(options);

    fs::path out_b = fresh_dir("siren_det_b");
    PipelineOptions replay = pipeline_options_from_manifest(ra.manifest_path, out_b);
    PipelineResult rb = cmd_pipeline(replay);

    CHECK(file_bytes(out_a / "send_a_text" / "report.json") ==
          file_bytes(out_b / "send_a_text" / "report.json"));
    CHECK(file_bytes(out_a / "send_a_text" / "final_delta.wav") ==
          file_bytes(out_b / "send_a_text" / "final_delta.wav"));
    CHECK(file_bytes(out_a / "eval_report.json") == file_bytes(out_b / "eval_report.json"));
    CHECK(ra.manifest.at("run_id") == rb.manifest.at("run_id"));

    fs::remove_all(corpus_dir);
    fs::remove_all(out_a);
    fs::remove_all(out_b);
    fs::remove_all(options.models_dir);
}
