#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace affectreg {

// 64-bit FNV-1a, used as the trailing checksum of model containers.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64(const void* data, std::size_t size);

// Lowercase hex SHA-256; cache keys for embedding storage.
std::string sha256_hex(std::string_view bytes);

} // namespace affectreg
