#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace blink {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
/// Streams the file; nullopt if it cannot be opened.
std::optional<std::string> sha256_file(const std::filesystem::path& path);

}  // namespace blink
