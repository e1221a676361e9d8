#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <array>
#include <sstream>

#include <json.hpp>

#include "millstone/error.hpp"
#include "millstone/queryapi/auth.hpp"

namespace millstone::queryapi {

using nlohmann::json;

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

std::string hmac_sha256(std::string_view key, std::string_view message) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> mac{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
            reinterpret_cast<const unsigned char*>(message.data()), message.size(), mac.data(), &len)) {
    throw Error(ErrorCode::Internal, "HMAC computation failed");
  }
  return std::string(reinterpret_cast<const char*>(mac.data()), len);
}

std::int64_t unix_seconds(Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count();
}

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::BadSignature, why); }

}  // namespace

std::string base64url_encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                   static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const auto n = static_cast<unsigned char>(bytes[i]) << 16;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
  } else if (rest == 2) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
  }
  return out;
}

std::string base64url_decode(std::string_view text) {
  if (text.size() % 4 == 1) bad("invalid base64url length");
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (const char c : text) {
    const auto v = kAlphabet.find(c);
    if (v == std::string_view::npos) bad("invalid base64url character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((acc >> bits) & 0xff);
    }
  }
  if ((acc & ((1u << bits) - 1)) != 0) bad("non-canonical base64url padding bits");
  return out;
}

std::string mint_token(std::string_view key, const std::string& subject, std::chrono::seconds ttl,
                       const std::vector<std::string>& scopes, Clock::time_point now) {
  if (key.empty()) throw Error(ErrorCode::InvalidArgument, "signing key is empty");
  if (ttl.count() < 0) throw Error(ErrorCode::InvalidArgument, "ttl must not be negative");
  std::string scope;
  for (const auto& s : scopes) scope += (scope.empty() ? "" : " ") + s;
  const auto iat = unix_seconds(now);
  const json header = {{"alg", "HS256"}, {"typ", "JWT"}};
  const json payload = {{"sub", subject}, {"iat", iat}, {"exp", iat + ttl.count()}, {"scope", scope}};
  const std::string signing_input = base64url_encode(header.dump()) + "." + base64url_encode(payload.dump());
  return signing_input + "." + base64url_encode(hmac_sha256(key, signing_input));
}

Principal verify_token(std::string_view token, std::string_view key, Clock::time_point now) {
  const auto first = token.find('.');
  const auto second = first == std::string_view::npos ? first : token.find('.', first + 1);
  if (second == std::string_view::npos || token.find('.', second + 1) != std::string_view::npos) {
    bad("token is not of the form header.payload.signature");
  }
  const auto signing_input = token.substr(0, second);
  const std::string signature = base64url_decode(token.substr(second + 1));
  const std::string expected = hmac_sha256(key, signing_input);
  if (signature.size() != expected.size() || CRYPTO_memcmp(signature.data(), expected.data(), expected.size()) != 0) {
    bad("token signature does not verify");
  }

  const json header = json::parse(base64url_decode(token.substr(0, first)), nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("alg", "") != "HS256") {
    bad("unsupported token header");
  }
  const json payload = json::parse(base64url_decode(token.substr(first + 1, second - first - 1)), nullptr, false);
  if (payload.is_discarded() || !payload.is_object() || !payload.contains("exp") ||
      !payload["exp"].is_number_integer() || !payload.contains("sub") || !payload["sub"].is_string()) {
    bad("malformed token payload");
  }

  Principal p;
  p.subject = payload["sub"].get<std::string>();
  p.expires_at = payload["exp"].get<std::int64_t>();
  if (unix_seconds(now) >= p.expires_at) throw Error(ErrorCode::Expired, "token expired");
  std::istringstream scopes(payload.value("scope", ""));
  for (std::string s; scopes >> s;) p.scopes.push_back(s);
  return p;
}

Principal authenticate(const std::optional<std::string>& authorization, std::string_view key,
                       Clock::time_point now) {
  if (!authorization || authorization->empty()) {
    throw Error(ErrorCode::MissingToken, "missing Authorization header");
  }
  constexpr std::string_view scheme = "Bearer ";
  std::string_view value = *authorization;
  if (value.size() <= scheme.size() || value.substr(0, scheme.size()) != scheme) {
    throw Error(ErrorCode::MissingToken, "Authorization header must carry a Bearer token");
  }
  value.remove_prefix(scheme.size());
  while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
  while (!value.empty() && value.back() == ' ') value.remove_suffix(1);
  if (value.empty()) throw Error(ErrorCode::MissingToken, "empty bearer token");
  return verify_token(value, key, now);
}

}  // namespace millstone::queryapi
