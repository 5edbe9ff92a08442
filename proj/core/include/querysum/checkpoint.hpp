#pragma once

#include <filesystem>
#include <string_view>

#include "querysum/model.hpp"

namespace querysum {

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& json_text);

/// FNV-1a 64-bit digest, hex-encoded. Stable across platforms and runs.
std::string fnv1a_hex(std::string_view bytes);
std::string file_fnv1a_hex(const std::filesystem::path& path);

/// Checkpoint layout: one JSON header line (format tag, model config,
/// named block sizes, caller-supplied fields such as seed / config hash /
/// resolved splits) terminated by '\n', then every parameter block
/// concatenated as little-endian float64.
void save_checkpoint(const std::filesystem::path& path, ModelParams& params,
                     const std::string& extra_json = "{}");

struct LoadedCheckpoint {
    ModelParams params;
    std::string header_json;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

} // namespace querysum
