#pragma once

// Operator configuration for the millstone binary. Values come from a
// key=value file (--config), MILLSTONE_* environment variables and command
// line flags; later sources win: flags > env > file > built-in defaults.

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "millstone/ann.hpp"
#include "millstone/encoder.hpp"

namespace millstone::cli {

using Settings = std::map<std::string, std::string>;

struct CliConfig {
  std::filesystem::path store_root = "millstone-data";
  encoder::EncoderConfig encoder;
  ann::HnswParams hnsw;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string signing_key;
  int workers = 0;  // 0 = all cores
  std::size_t threads = 8;

  // Where each effective value came from: "default", "file", "env", "flag".
  std::map<std::string, std::string> origin;
};

// Recognized keys, in the order describe() prints them.
const std::vector<std::string>& known_keys();

// Lines "key = value" or "key=value"; '#' starts a comment; values may be
// double-quoted; "[section]" lines are ignored. Throws Error(InvalidArgument)
// naming the line for anything else.
Settings parse_config_text(std::string_view text);
// Throws Error(SourceUnreadable) when the file cannot be read.
Settings read_config_file(const std::filesystem::path& path);

// MILLSTONE_ADDR, MILLSTONE_SIGNING_KEY, MILLSTONE_STORE_ROOT,
// MILLSTONE_ENCODER_URL mapped to their keys.
Settings env_settings(const std::function<const char*(const char*)>& getenv_fn);

// Applies the layers over the defaults and validates the result. Throws
// Error(InvalidArgument) for unknown keys, malformed numbers or invalid
// combinations.
CliConfig resolve_config(const Settings& file, const Settings& env, const Settings& flags);

// "host:port" split. Throws Error(InvalidArgument).
std::pair<std::string, int> parse_address(std::string_view addr);

// One "key = value (origin)" line per key; the signing key is redacted.
std::string describe(const CliConfig& config);

}  // namespace millstone::cli
