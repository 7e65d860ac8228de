#include "siren/config_io.hpp"

#include <fstream>

#include "siren/sha256.hpp"

namespace siren {

namespace {

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& context) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            fail(ErrorCode::InvalidConfig, "unknown key '" + it.key() + "' in " + context);
    }
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

nlohmann::json attack_config_to_json(const AttackConfig& c) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["alpha"] = c.alpha;
    j["epsilon"] = c.epsilon;
    j["eta"] = c.eta;
    j["sigma_std"] = c.sigma_std;
    j["max_steps"] = c.max_steps;
    j["seed"] = c.seed;
    j["weights"] = {{"c1", c.weights.c1}, {"c2", c.weights.c2}};
    j["init"] = {{"stride", c.init.stride},
                 {"mu_max", c.init.mu_max},
                 {"position_stride", c.init.position_stride}};
    j["mfcc"] = {{"frame_length", c.mfcc.frame_length},
                 {"hop_length", c.mfcc.hop_length},
                 {"n_mels", c.mfcc.n_mels},
                 {"n_coeffs", c.mfcc.n_coeffs},
                 {"log_floor", c.mfcc.log_floor},
                 {"pre_emphasis", c.mfcc.pre_emphasis},
                 {"pre_emphasis_coeff", c.mfcc.pre_emphasis_coeff}};
    j["fresh_noise_per_delta"] = c.fresh_noise_per_delta;
    j["adversarial_only_update"] = c.adversarial_only_update;
    j["stop_after_first_valid"] = c.stop_after_first_valid;
    return j;
}

AttackConfig attack_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorCode::InvalidConfig, "attack config must be a JSON object");
    reject_unknown_keys(j,
                        {"schema_version", "alpha", "epsilon", "eta", "sigma_std", "max_steps",
                         "seed", "weights", "init", "mfcc", "fresh_noise_per_delta",
                         "adversarial_only_update", "stop_after_first_valid"},
                        "attack config");
    int version = 1;
    read_if(j, "schema_version", version);
    if (version != 1)
        fail(ErrorCode::InvalidConfig, "unsupported config schema version " +
                                           std::to_string(version));

    AttackConfig c;
    read_if(j, "alpha", c.alpha);
    read_if(j, "epsilon", c.epsilon);
    read_if(j, "eta", c.eta);
    read_if(j, "sigma_std", c.sigma_std);
    read_if(j, "max_steps", c.max_steps);
    read_if(j, "seed", c.seed);
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        reject_unknown_keys(w, {"c1", "c2"}, "weights");
        read_if(w, "c1", c.weights.c1);
        read_if(w, "c2", c.weights.c2);
    }
    if (j.contains("init")) {
        const auto& i = j.at("init");
        reject_unknown_keys(i, {"stride", "mu_max", "position_stride"}, "init");
        read_if(i, "stride", c.init.stride);
        read_if(i, "mu_max", c.init.mu_max);
        read_if(i, "position_stride", c.init.position_stride);
    }
    if (j.contains("mfcc")) {
        const auto& m = j.at("mfcc");
        reject_unknown_keys(m,
                            {"frame_length", "hop_length", "n_mels", "n_coeffs", "log_floor",
                             "pre_emphasis", "pre_emphasis_coeff"},
                            "mfcc");
        read_if(m, "frame_length", c.mfcc.frame_length);
        read_if(m, "hop_length", c.mfcc.hop_length);
        read_if(m, "n_mels", c.mfcc.n_mels);
        read_if(m, "n_coeffs", c.mfcc.n_coeffs);
        read_if(m, "log_floor", c.mfcc.log_floor);
        read_if(m, "pre_emphasis", c.mfcc.pre_emphasis);
        read_if(m, "pre_emphasis_coeff", c.mfcc.pre_emphasis_coeff);
    }
    read_if(j, "fresh_noise_per_delta", c.fresh_noise_per_delta);
    read_if(j, "adversarial_only_update", c.adversarial_only_update);
    read_if(j, "stop_after_first_valid", c.stop_after_first_valid);
    c.validate();
    return c;
}

AttackConfig load_attack_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::IoError, "cannot read config: " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::InvalidConfig, "bad config json: " + std::string(e.what()));
    }
    return attack_config_from_json(j);
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::IoError, "cannot read: " + path.string());
    Sha256 h;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof(buf));
        std::streamsize got = f.gcount();
        if (got > 0) h.update(buf, static_cast<size_t>(got));
    }
    return h.hex_digest();
}

}  // namespace siren
