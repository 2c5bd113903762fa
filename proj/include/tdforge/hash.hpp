#pragma once

#include <span>
#include <string>
#include <string_view>

#include "tdforge/ast.hpp"

namespace tdforge {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);

/// Lowercase contiguous hex, e.g. "2b00".
std::string to_hex(std::span<const std::uint8_t> data);
/// Lowercase, space-separated, e.g. "2b 00".
std::string to_spaced_hex(std::span<const std::uint8_t> data);
/// Inverse of to_hex and to_spaced_hex (whitespace is skipped); throws
/// std::invalid_argument on odd length or bad digits.
Bytes from_hex(std::string_view hex);

}  // namespace tdforge
