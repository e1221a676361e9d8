#pragma once

// HS256 JSON Web Tokens: base64url(header).base64url(payload).base64url(sig)
// with payload {"sub", "iat", "exp", "scope"}.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace millstone::queryapi {

struct Principal {
  std::string subject;
  std::int64_t expires_at = 0;  // unix seconds
  std::vector<std::string> scopes;
};

using Clock = std::chrono::system_clock;

std::string base64url_encode(std::string_view bytes);
// Throws Error(BadSignature) on characters outside the alphabet.
std::string base64url_decode(std::string_view text);

// Throws Error(InvalidArgument) for an empty key or negative ttl.
std::string mint_token(std::string_view key, const std::string& subject, std::chrono::seconds ttl,
                       const std::vector<std::string>& scopes = {"query"}, Clock::time_point now = Clock::now());

// Expired once now >= exp. Throws Error(BadSignature) for malformed or
// forged tokens and Error(Expired).
Principal verify_token(std::string_view token, std::string_view key, Clock::time_point now = Clock::now());

// `authorization` is the raw header value ("Bearer <token>"). Throws
// Error(MissingToken) when absent or not a bearer credential.
Principal authenticate(const std::optional<std::string>& authorization, std::string_view key,
                       Clock::time_point now = Clock::now());

}  // namespace millstone::queryapi
