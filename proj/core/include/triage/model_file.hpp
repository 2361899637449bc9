#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "triage/pipeline.hpp"

namespace triage {

/// Binary layout:
///   "TRIA" | u32 version (LE) | u64 header length (LE) | JSON header | fp64 LE arrays
/// The header names every array with its shape and byte offset into the
/// payload, and carries the preprocessing state, label set, seed and config
/// digest. A 64-bit FNV-1a checksum of the payload guards against corruption.
inline constexpr std::uint32_t kModelFileVersion = 1;

std::string serialize_model(const TextClassifier& model);
TextClassifier deserialize_model(std::string_view bytes);

void save_model(const std::filesystem::path& path, const TextClassifier& model);
TextClassifier load_model(const std::filesystem::path& path);

}  // namespace triage
