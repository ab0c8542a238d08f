#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace flowguard {

/// Lowercase hex SHA-256 digest.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

}  // namespace flowguard
