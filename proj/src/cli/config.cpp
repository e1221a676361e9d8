#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "millstone/cli_config.hpp"
#include "millstone/error.hpp"

namespace millstone::cli {

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidArgument, "config '" + key + "': '" + text + "' is not a valid number");
  }
  return value;
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "store_root",  "addr",          "signing_key",         "encoder_url",     "encoder_timeout_ms",
      "encoder_dim", "token_limit",   "hash_seed",           "hnsw_m",          "hnsw_ef_construction",
      "hnsw_ef_search", "hnsw_seed",  "workers",             "threads",
  };
  return keys;
}

Settings parse_config_text(std::string_view text) {
  Settings out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty() || (line.front() == '[' && line.back() == ']')) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(line_no) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[key] = value;
  }
  return out;
}

Settings read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SourceUnreadable, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

Settings env_settings(const std::function<const char*(const char*)>& getenv_fn) {
  static const std::pair<const char*, const char*> vars[] = {
      {"MILLSTONE_ADDR", "addr"},
      {"MILLSTONE_SIGNING_KEY", "signing_key"},
      {"MILLSTONE_STORE_ROOT", "store_root"},
      {"MILLSTONE_ENCODER_URL", "encoder_url"},
  };
  Settings out;
  for (const auto& [var, key] : vars) {
    if (const char* v = getenv_fn(var); v && *v) out[key] = v;
  }
  return out;
}

std::pair<std::string, int> parse_address(std::string_view addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(ErrorCode::InvalidArgument, "address '" + std::string(addr) + "' must be host:port");
  }
  const std::string port_text(addr.substr(colon + 1));
  const int port = parse_number<int>("addr", port_text);
  if (port < 0 || port > 65535) throw Error(ErrorCode::InvalidArgument, "port " + port_text + " out of range");
  return {std::string(addr.substr(0, colon)), port};
}

CliConfig resolve_config(const Settings& file, const Settings& env, const Settings& flags) {
  Settings merged;
  std::map<std::string, std::string> origin;
  for (const auto& [layer, name] : {std::pair{&file, "file"}, std::pair{&env, "env"}, std::pair{&flags, "flag"}}) {
    for (const auto& [key, value] : *layer) {
      if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end()) {
        throw Error(ErrorCode::InvalidArgument, std::string("unknown config key '") + key + "' (from " + name + ")");
      }
      merged[key] = value;
      origin[key] = name;
    }
  }

  CliConfig c;
  std::optional<std::size_t> m;
  for (const auto& [key, v] : merged) {
    if (key == "store_root") {
      if (v.empty()) throw Error(ErrorCode::InvalidArgument, "store_root must not be empty");
      c.store_root = v;
    } else if (key == "addr") {
      std::tie(c.host, c.port) = parse_address(v);
    } else if (key == "signing_key") {
      c.signing_key = v;
    } else if (key == "encoder_url") {
      if (!c.encoder.remote) c.encoder.remote.emplace();
      c.encoder.remote->url = v;
    } else if (key == "encoder_timeout_ms") {
      if (!c.encoder.remote) c.encoder.remote.emplace();
      c.encoder.remote->timeout_ms = parse_number<int>(key, v);
    } else if (key == "encoder_dim") {
      c.encoder.dim = parse_number<std::size_t>(key, v);
    } else if (key == "token_limit") {
      c.encoder.token_limit = parse_number<std::size_t>(key, v);
    } else if (key == "hash_seed") {
      c.encoder.hash_seed = parse_number<std::uint64_t>(key, v);
    } else if (key == "hnsw_m") {
      m = parse_number<std::size_t>(key, v);
    } else if (key == "workers") {
      c.workers = parse_number<int>(key, v);
    } else if (key == "threads") {
      c.threads = parse_number<std::size_t>(key, v);
    }
  }
  // m determines m0 and ml, so it is applied before the other HNSW keys.
  if (m) c.hnsw = ann::HnswParams::for_m(*m);
  if (auto it = merged.find("hnsw_ef_construction"); it != merged.end()) {
    c.hnsw.ef_construction = parse_number<std::size_t>(it->first, it->second);
  }
  if (auto it = merged.find("hnsw_ef_search"); it != merged.end()) {
    c.hnsw.ef_search = parse_number<std::size_t>(it->first, it->second);
  }
  if (auto it = merged.find("hnsw_seed"); it != merged.end()) {
    c.hnsw.rng_seed = parse_number<std::uint64_t>(it->first, it->second);
  }

  if (c.encoder.remote && c.encoder.remote->url.empty()) {
    throw Error(ErrorCode::InvalidArgument, "encoder_timeout_ms given without encoder_url");
  }
  if (c.workers < 0) throw Error(ErrorCode::InvalidArgument, "workers must not be negative");
  if (c.threads == 0) throw Error(ErrorCode::InvalidArgument, "threads must be at least 1");
  c.encoder.validate();
  c.hnsw.validate();

  for (const auto& key : known_keys()) c.origin[key] = origin.contains(key) ? origin[key] : "default";
  return c;
}

std::string describe(const CliConfig& c) {
  std::ostringstream out;
  auto line = [&](const std::string& key, const std::string& value) {
    out << key << " = " << value << " (" << c.origin.at(key) << ")\n";
  };
  line("store_root", c.store_root.string());
  line("addr", c.host + ":" + std::to_string(c.port));
  line("signing_key", c.signing_key.empty() ? "<unset>" : "<redacted>");
  line("encoder_url", c.encoder.remote ? c.encoder.remote->url : "<hashing encoder>");
  line("encoder_timeout_ms", c.encoder.remote ? std::to_string(c.encoder.remote->timeout_ms) : "-");
  line("encoder_dim", std::to_string(c.encoder.dim));
  line("token_limit", std::to_string(c.encoder.token_limit));
  line("hash_seed", std::to_string(c.encoder.hash_seed));
  line("hnsw_m", std::to_string(c.hnsw.m));
  line("hnsw_ef_construction", std::to_string(c.hnsw.ef_construction));
  line("hnsw_ef_search", std::to_string(c.hnsw.ef_search));
  line("hnsw_seed", std::to_string(c.hnsw.rng_seed));
  line("workers", c.workers == 0 ? "auto" : std::to_string(c.workers));
  line("threads", std::to_string(c.threads));
  return out.str();
}

}  // namespace millstone::cli
