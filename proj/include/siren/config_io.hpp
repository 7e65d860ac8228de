#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "siren/optimizer.hpp"

namespace siren {

// Versioned JSON codec for AttackConfig. Unknown keys are rejected at every
// level so configs stay reproducible; every known key is optional and
// defaults as in the struct.
nlohmann::json attack_config_to_json(const AttackConfig& config);
AttackConfig attack_config_from_json(const nlohmann::json& j);
AttackConfig load_attack_config(const std::filesystem::path& path);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace siren
