#pragma once

// Text -> Embedding. Two interchangeable backends:
//  - a deterministic signed feature-hashing embedder (local, default);
//  - a JSON/HTTP client for a remote model server.
// Both honor the same contract: fixed output dimension and a 512-token input
// budget estimated at 1.2 tokens per word.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "millstone/model.hpp"

namespace millstone::encoder {

struct RemoteBackend {
  std::string url;  // e.g. "http://127.0.0.1:9000/encode"
  int timeout_ms = 5000;
  int max_in_flight = 4;
};

struct EncoderConfig {
  std::size_t dim = kDefaultDim;
  std::size_t token_limit = 512;
  double tokens_per_word = 1.2;
  std::uint64_t hash_seed = 0;
  std::optional<RemoteBackend> remote;  // empty = hashing backend

  // Throws Error(InvalidArgument).
  void validate() const;
};

struct EncodeRequest {
  std::string id;
  std::vector<DocumentPart> parts;
};

// Splits on every ASCII non-alphanumeric byte and lowercases ASCII letters.
// Bytes >= 0x80 (UTF-8 sequences) are kept inside words.
std::vector<std::string> word_tokenize(std::string_view text);

// ceil(word_count * tokens_per_word); products within 1e-9 of an integer
// count as that integer so that e.g. 10 * 1.2 is 12, not 13.
std::size_t estimate_tokens(std::size_t word_count, const EncoderConfig& cfg);

// Longest prefix whose estimate fits token_limit. Callers pass title words
// before abstract words, which gives the title priority.
std::vector<std::string> truncate_to_budget(std::vector<std::string> words, const EncoderConfig& cfg);

// FNV-1a 64 with the seed XOR-ed into the offset basis.
std::uint64_t hash64(std::string_view word, std::uint64_t seed) noexcept;

// Truncated title+abstract words of the request, in encoding order.
// Throws EmptyDocument / AllWordsFiltered.
std::vector<std::string> encoding_words(const EncodeRequest& req, const EncoderConfig& cfg);

// Hashing backend. Throws EmptyDocument or AllWordsFiltered.
Embedding encode(const EncodeRequest& req, const EncoderConfig& cfg);

struct EncodeOutcome {
  std::string id;
  std::optional<Embedding> embedding;
  std::optional<Error> error;

  bool ok() const noexcept { return embedding.has_value(); }
};

// Per-item failures are reported in the outcome; throws DuplicateId when two
// requests share an id.
std::vector<EncodeOutcome> encode_batch(std::span<const EncodeRequest> reqs, const EncoderConfig& cfg);

// Client for a remote encoder speaking
//   POST {"documents":[{"id":..,"parts":[{"key":..,"value":..}]}]}
//   -> {"embeddings":[{"id":..,"vector":[..]}]}
// MILLSTONE_ENCODER_URL, when set, overrides the configured url.
class RemoteEncoder {
 public:
  explicit RemoteEncoder(EncoderConfig cfg);
  ~RemoteEncoder();
  RemoteEncoder(RemoteEncoder&&) noexcept;
  RemoteEncoder& operator=(RemoteEncoder&&) noexcept;

  const std::string& url() const noexcept;

  // Throws RemoteUnavailable or RemoteBadResponse. Safe to call concurrently;
  // at most max_in_flight requests are outstanding at once.
  std::vector<std::pair<std::string, Embedding>> encode(std::span<const EncodeRequest> reqs) const;

 private:
  struct State;
  EncoderConfig cfg_;
  std::unique_ptr<State> state_;
};

std::vector<std::pair<std::string, Embedding>> remote_encode(std::span<const EncodeRequest> reqs,
                                                             const EncoderConfig& cfg);

// Facade dispatching to whichever backend the config selects.
class Encoder {
 public:
  explicit Encoder(EncoderConfig cfg = {});

  const EncoderConfig& config() const noexcept { return cfg_; }
  std::size_t dim() const noexcept { return cfg_.dim; }

  Embedding encode(const EncodeRequest& req) const;
  std::vector<EncodeOutcome> encode_batch(std::span<const EncodeRequest> reqs) const;

 private:
  EncoderConfig cfg_;
  std::shared_ptr<RemoteEncoder> remote_;
};

}  // namespace millstone::encoder
