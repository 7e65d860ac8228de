#include "siren/registry.hpp"

#include <fstream>

#include "siren/toy_ctc.hpp"

namespace siren {

AdapterRegistry AdapterRegistry::with_builtin_loaders() {
    AdapterRegistry reg;
    reg.register_loader(DecoderKind::Ctc, [](const AdapterManifest& m) {
        auto model = ToyCtcModel::load(m.checkpoint);
        if (model->sample_rate() != m.sample_rate)
            fail(ErrorCode::InvalidConfig,
                 m.id + ": manifest sample rate disagrees with checkpoint");
        return model;
    });
    reg.register_loader(DecoderKind::ThresholdMock, [](const AdapterManifest& m) {
        double threshold = m.params.value("threshold", 0.0);
        size_t begin = m.params.value("window_begin", size_t{0});
        size_t end = m.params.value("window_end", std::numeric_limits<size_t>::max());
        std::string text = m.params.value("text", "");
        return std::make_shared<ThresholdMock>(m.id, text, threshold, begin, end);
    });
    return reg;
}

void AdapterRegistry::register_loader(DecoderKind kind, Loader loader) {
    loaders_[kind] = std::move(loader);
}

void AdapterRegistry::add(const AdapterManifest& manifest) {
    if (manifest.id.empty()) fail(ErrorCode::InvalidConfig, "adapter manifest without id");
    manifests_[manifest.id] = manifest;
}

void AdapterRegistry::scan_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) return;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto& path = entry.path();
        if (path.extension() != ".json") continue;
        if (path.stem().extension() != ".manifest") continue;
        add(read_adapter_manifest(path));
    }
}

bool AdapterRegistry::has(const std::string& id) const { return manifests_.count(id) > 0; }

std::shared_ptr<SurrogateModel> AdapterRegistry::load(const std::string& id) const {
    auto it = manifests_.find(id);
    if (it == manifests_.end())
        fail(ErrorCode::InvalidConfig, "no registered surrogate with id '" + id + "'");
    auto loader = loaders_.find(it->second.decoder_kind);
    if (loader == loaders_.end())
        fail(ErrorCode::InvalidConfig,
             "no loader for decoder kind '" + std::string(to_string(it->second.decoder_kind)) +
                 "' (id '" + id + "')");
    return loader->second(it->second);
}

std::vector<std::string> AdapterRegistry::ids() const {
    std::vector<std::string> out;
    out.reserve(manifests_.size());
    for (const auto& [id, _] : manifests_) out.push_back(id);
    return out;
}

AdapterManifest read_adapter_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::IoError, "cannot read adapter manifest: " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::InvalidConfig, "bad adapter manifest json: " + std::string(e.what()));
    }

    AdapterManifest m;
    m.id = j.at("id").get<std::string>();
    m.category = category_from_string(j.at("category").get<std::string>());
    m.decoder_kind = decoder_kind_from_string(j.at("decoder_kind").get<std::string>());
    m.sample_rate = j.at("sample_rate").get<int>();
    if (j.contains("checkpoint")) {
        std::filesystem::path ckpt = j.at("checkpoint").get<std::string>();
        m.checkpoint = ckpt.is_absolute() ? ckpt : path.parent_path() / ckpt;
    }
    if (j.contains("params")) m.params = j.at("params");
    return m;
}

void write_adapter_manifest(const std::filesystem::path& path, const AdapterManifest& m) {
    nlohmann::json j;
    j["id"] = m.id;
    j["category"] = to_string(m.category);
    j["decoder_kind"] = to_string(m.decoder_kind);
    j["sample_rate"] = m.sample_rate;
    if (!m.checkpoint.empty()) j["checkpoint"] = m.checkpoint.filename().string();
    if (!m.params.is_null()) j["params"] = m.params;
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(ErrorCode::IoError, "cannot write adapter manifest: " + path.string());
    f << j.dump(2) << "\n";
}

}  // namespace siren
