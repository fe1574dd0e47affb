#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace sensorpipe {

// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_file(const std::string& path);

}  // namespace sensorpipe
