#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Thin wrappers over OpenSSL.
namespace agora::crypto {

using Digest = std::array<std::uint8_t, 32>;

Digest hmac_sha256(std::string_view key, std::span<const std::uint8_t> message);
Digest hmac_sha256(std::string_view key, std::string_view message);
Digest sha256(std::string_view message);

/// Constant-time comparison.
bool equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) noexcept;

std::string to_hex(std::span<const std::uint8_t> bytes);

/// Standard alphabet with padding.
std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Strict: rejects anything that does not re-encode to the same text.
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);

}  // namespace agora::crypto
