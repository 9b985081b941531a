#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace dialeval {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

// Per-stage seed: the first 8 bytes of SHA-256("<seed>/<stage>"), big-endian.
// Stages can then be rerun independently without sharing a generator.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

}  // namespace dialeval
