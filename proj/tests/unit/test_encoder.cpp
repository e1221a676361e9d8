#include <doctest.h>

#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "millstone/encoder.hpp"

using namespace millstone;
using namespace millstone::encoder;

namespace {

// Independent FNV-1a 64 reference.
std::uint64_t fnv1a(const std::string& s, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

EncodeRequest request(std::string id, std::string title, std::string abstract = "") {
  EncodeRequest r{std::move(id), {{PartKey::Title, std::move(title)}}};
  if (!abstract.empty()) r.parts.push_back({PartKey::Abstract, std::move(abstract)});
  return r;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

std::string words(std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += "w" + std::to_string(i) + " ";
  return out;
}

// Minimal remote encoder: answers with a fixed vector per id, or with a
// configurable malformation.
class StubEncoder {
 public:
  enum class Mode { Good, WrongDim, MissingId, NotJson, ServerError };

  explicit StubEncoder(Mode mode, std::size_t dim) : mode_(mode), dim_(dim) {
    server_.Post("/encode", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json out = {{"embeddings", nlohmann::json::array()}};
      for (const auto& d : body["documents"]) {
        std::vector<double> v(mode_ == Mode::WrongDim ? dim_ + 1 : dim_, 0.0);
        v[0] = 1.0;
        if (mode_ != Mode::MissingId) out["embeddings"].push_back({{"id", d["id"]}, {"vector", v}});
      }
      if (mode_ == Mode::NotJson) {
        res.set_content("<html>", "text/html");
      } else if (mode_ == Mode::ServerError) {
        res.status = 500;
      } else {
        res.set_content(out.dump(), "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubEncoder() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/encode"; }
  int calls() const { return calls_; }

 private:
  Mode mode_;
  std::size_t dim_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
};

EncoderConfig remote_config(const std::string& url, std::size_t dim) {
  EncoderConfig cfg;
  cfg.dim = dim;
  cfg.remote = RemoteBackend{url, 2000, 2};
  return cfg;
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("tokenization") {
    using V = std::vector<std::string>;
    CHECK(word_tokenize("Hello, World!  x2") == V{"hello", "world", "x2"});
    CHECK(word_tokenize("state-of-the-art") == V{"state", "of", "the", "art"});
    CHECK(word_tokenize("\xc3\x84RGER ok") == V{"\xc3\x84rger", "ok"});
    CHECK(word_tokenize(" ,.;").empty());
  }

  TEST_CASE("token estimate uses 1.2 tokens per word rounded up") {
    const EncoderConfig cfg;
    CHECK(estimate_tokens(0, cfg) == 0);
    CHECK(estimate_tokens(1, cfg) == 2);
    CHECK(estimate_tokens(10, cfg) == 12);
    CHECK(estimate_tokens(426, cfg) == 512);
    CHECK(estimate_tokens(427, cfg) == 513);
  }

  TEST_CASE("truncation keeps the longest prefix within 512 tokens") {
    const EncoderConfig cfg;
    std::vector<std::string> w;
    for (int i = 0; i < 1000; ++i) w.push_back("w" + std::to_string(i));
    const auto kept = truncate_to_budget(w, cfg);
    CHECK(kept.size() == 426);
    CHECK(kept.back() == "w425");
    CHECK(estimate_tokens(kept.size(), cfg) <= 512);
    CHECK(truncate_to_budget({"a", "b"}, cfg).size() == 2);
  }

  TEST_CASE("title words come first and survive truncation") {
    EncoderConfig cfg;
    const auto req = request("x", "Airbag module", words(1000));
    const auto kept = encoding_words(req, cfg);
    REQUIRE(kept.size() == 426);
    CHECK(kept[0] == "airbag");
    CHECK(kept[1] == "module");
  }

  TEST_CASE("hash matches FNV-1a with the seed folded into the offset basis") {
    CHECK(hash64("", 0) == 0xcbf29ce484222325ULL);
    CHECK(hash64("a", 0) == 0xaf63dc4c8601ec8cULL);
    for (const char* w : {"airbag", "vehicle", "\xc3\xa4"}) {
      CHECK(hash64(w, 0) == fnv1a(w, 0));
      CHECK(hash64(w, 99) == fnv1a(w, 99));
    }
  }

  TEST_CASE("single word lands in its bucket with the hash sign") {
    EncoderConfig cfg;
    cfg.dim = 4;
    const auto e = encode(request("x", "a"), cfg);
    CHECK(e.components() == std::vector<double>{-1.0, 0.0, 0.0, 0.0});
  }

  TEST_CASE("encoding equals an independent signed-bucket oracle") {
    EncoderConfig cfg;
    cfg.dim = 16;
    const auto e = encode(request("x", "Gas generator", "for an inflatable cushion"), cfg);
    std::vector<double> ref(16, 0.0);
    for (const std::string w : {"gas", "generator", "for", "an", "inflatable", "cushion"}) {
      const auto h = fnv1a(w, 0);
      ref[h % 16] += (h >> 63) ? -1.0 : 1.0;
    }
    double n = 0;
    for (double v : ref) n += v * v;
    for (double& v : ref) v /= std::sqrt(n);
    for (std::size_t i = 0; i < 16; ++i) CHECK(e[i] == doctest::Approx(ref[i]).epsilon(1e-15));
  }

  TEST_CASE("default output has 768 unit-norm components and is deterministic") {
    const EncoderConfig cfg;
    const auto req = request("x", "Airbag", "Airbags are inflatable cushions.");
    const auto a = encode(req, cfg);
    const auto b = encode(req, cfg);
    CHECK(a.dim() == 768);
    CHECK(a.norm() == doctest::Approx(1.0));
    CHECK(a == b);
  }

  TEST_CASE("input errors") {
    const EncoderConfig cfg;
    CHECK(code_of([&] { encode(request("x", "   "), cfg); }) == ErrorCode::EmptyDocument);
    CHECK(code_of([&] { encode(EncodeRequest{"x", {{PartKey::Claims, "only claims"}}}, cfg); }) ==
          ErrorCode::EmptyDocument);
    CHECK(code_of([&] { encode(request("x", "!!! ---"), cfg); }) == ErrorCode::AllWordsFiltered);
    EncoderConfig bad;
    bad.dim = 0;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("batches keep order and report per-item failures") {
    const EncoderConfig cfg;
    const std::vector<EncodeRequest> reqs{request("a", "first text"), request("b", " "), request("c", "third")};
    const auto out = encode_batch(reqs, cfg);
    REQUIRE(out.size() == 3);
    CHECK(out[0].ok());
    CHECK(out[0].embedding == encode(reqs[0], cfg));
    CHECK_FALSE(out[1].ok());
    CHECK(out[1].error->code() == ErrorCode::EmptyDocument);
    CHECK(out[2].id == "c");
    const std::vector<EncodeRequest> dup{request("a", "x"), request("a", "y")};
    CHECK(code_of([&] { encode_batch(dup, cfg); }) == ErrorCode::DuplicateId);

    std::vector<EncodeRequest> many;
    for (int i = 0; i < 200; ++i) many.push_back(request(std::to_string(i), "text number " + std::to_string(i)));
    const auto big = encode_batch(many, cfg);
    for (int i = 0; i < 200; ++i) CHECK(big[i].embedding == encode(many[i], cfg));
  }

  TEST_CASE("remote backend round trip") {
    StubEncoder stub(StubEncoder::Mode::Good, 8);
    const Encoder enc(remote_config(stub.url(), 8));
    const auto e = enc.encode(request("x", "some text"));
    CHECK(e.dim() == 8);
    CHECK(e[0] == 1.0);
    const std::vector<EncodeRequest> reqs{request("a", "one"), request("b", " "), request("c", "three")};
    const auto out = enc.encode_batch(reqs);
    CHECK(out[0].ok());
    CHECK(out[1].error->code() == ErrorCode::EmptyDocument);
    CHECK(out[2].ok());
    CHECK(stub.calls() == 2);
  }

  TEST_CASE("remote backend failures") {
    for (auto mode : {StubEncoder::Mode::WrongDim, StubEncoder::Mode::MissingId, StubEncoder::Mode::NotJson,
                      StubEncoder::Mode::ServerError}) {
      StubEncoder stub(mode, 8);
      const Encoder enc(remote_config(stub.url(), 8));
      CHECK(code_of([&] { enc.encode(request("x", "text")); }) == ErrorCode::RemoteBadResponse);
    }
    int port = 0;
    {
      httplib::Server probe;
      port = probe.bind_to_any_port("127.0.0.1");
    }
    const Encoder enc(remote_config("http://127.0.0.1:" + std::to_string(port) + "/encode", 8));
    CHECK(code_of([&] { enc.encode(request("x", "text")); }) == ErrorCode::RemoteUnavailable);
  }
}
