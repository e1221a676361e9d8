#include <cmath>
#include <cstdlib>
#include <map>
#include <semaphore>

#include <httplib.h>
#include <json.hpp>

#include "millstone/encoder.hpp"

namespace millstone::encoder {

using nlohmann::json;

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "remote encoder url needs a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

struct RemoteEncoder::State {
  explicit State(int limit) : slots(limit) {}
  std::counting_semaphore<1024> slots;
  ParsedUrl target;
};

RemoteEncoder::RemoteEncoder(EncoderConfig cfg) : cfg_(std::move(cfg)) {
  if (!cfg_.remote) cfg_.remote = RemoteBackend{};
  if (const char* env = std::getenv("MILLSTONE_ENCODER_URL"); env != nullptr && *env != '\0') {
    cfg_.remote->url = env;
  }
  cfg_.validate();
  state_ = std::make_unique<State>(std::min(cfg_.remote->max_in_flight, 1024));
  state_->target = split_url(cfg_.remote->url);
}

RemoteEncoder::~RemoteEncoder() = default;
RemoteEncoder::RemoteEncoder(RemoteEncoder&&) noexcept = default;
RemoteEncoder& RemoteEncoder::operator=(RemoteEncoder&&) noexcept = default;

const std::string& RemoteEncoder::url() const noexcept { return cfg_.remote->url; }

std::vector<std::pair<std::string, Embedding>> RemoteEncoder::encode(
    std::span<const EncodeRequest> reqs) const {
  json docs = json::array();
  for (const auto& r : reqs) {
    json parts = json::array();
    for (const auto& p : r.parts) parts.push_back({{"key", to_string(p.key)}, {"value", p.value}});
    docs.push_back({{"id", r.id}, {"parts", std::move(parts)}});
  }
  const std::string body = json{{"documents", std::move(docs)}}.dump();

  httplib::Result res;
  {
    state_->slots.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{state_->slots};

    httplib::Client client(state_->target.origin);
    const auto timeout = std::chrono::milliseconds(cfg_.remote->timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    res = client.Post(state_->target.path, body, "application/json");
  }
  if (!res) {
    throw Error(ErrorCode::RemoteUnavailable,
                "remote encoder " + url() + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::RemoteBadResponse,
                "remote encoder answered HTTP " + std::to_string(res->status));
  }

  auto bad = [](const std::string& why) { return Error(ErrorCode::RemoteBadResponse, "remote encoder: " + why); };
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object() || !reply.contains("embeddings") ||
      !reply["embeddings"].is_array()) {
    throw bad("malformed body");
  }
  std::map<std::string, Embedding> by_id;
  for (const auto& item : reply["embeddings"]) {
    if (!item.is_object() || !item.contains("id") || !item["id"].is_string() || !item.contains("vector") ||
        !item["vector"].is_array()) {
      throw bad("malformed embedding entry");
    }
    const auto& vec = item["vector"];
    if (vec.size() != cfg_.dim) {
      throw bad("expected dimension " + std::to_string(cfg_.dim) + ", got " + std::to_string(vec.size()));
    }
    std::vector<double> values;
    values.reserve(vec.size());
    for (const auto& v : vec) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) throw bad("non-finite vector component");
      values.push_back(v.get<double>());
    }
    by_id.insert_or_assign(item["id"].get<std::string>(), Embedding(std::move(values)));
  }

  std::vector<std::pair<std::string, Embedding>> out;
  out.reserve(reqs.size());
  for (const auto& r : reqs) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) throw bad("no embedding returned for '" + r.id + "'");
    out.emplace_back(r.id, it->second);
  }
  return out;
}

std::vector<std::pair<std::string, Embedding>> remote_encode(std::span<const EncodeRequest> reqs,
                                                             const EncoderConfig& cfg) {
  return RemoteEncoder(cfg).encode(reqs);
}

}  // namespace millstone::encoder
