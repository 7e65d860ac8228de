#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "siren/surrogate.hpp"

namespace siren {

// One registered recognizer: what it is and where its weights live.
struct AdapterManifest {
    std::string id;
    ModelCategory category = ModelCategory::Mock;
    DecoderKind decoder_kind = DecoderKind::ThresholdMock;
    int sample_rate = 16000;
    std::filesystem::path checkpoint;  // resolved against the manifest's directory
    nlohmann::json params;             // decoder-specific extras (mock windows etc.)
};

// String-id keyed registry. Loaders are keyed by decoder kind; the built-ins
// cover the in-repo CTC model and the threshold mock. No transducer loader
// ships — external adapters may register one.
class AdapterRegistry {
public:
    using Loader = std::function<std::shared_ptr<SurrogateModel>(const AdapterManifest&)>;

    static AdapterRegistry with_builtin_loaders();

    void register_loader(DecoderKind kind, Loader loader);
    void add(const AdapterManifest& manifest);

    // Reads every *.manifest.json in the directory.
    void scan_dir(const std::filesystem::path& dir);

    bool has(const std::string& id) const;
    std::shared_ptr<SurrogateModel> load(const std::string& id) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, AdapterManifest> manifests_;
    std::map<DecoderKind, Loader> loaders_;
};

AdapterManifest read_adapter_manifest(const std::filesystem::path& path);
void write_adapter_manifest(const std::filesystem::path& path, const AdapterManifest& manifest);

}  // namespace siren
