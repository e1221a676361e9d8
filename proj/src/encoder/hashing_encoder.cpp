#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "millstone/encoder.hpp"

namespace millstone::encoder {

void EncoderConfig::validate() const {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "encoder dim must be >= 1");
  if (token_limit < 1) throw Error(ErrorCode::InvalidArgument, "token_limit must be >= 1");
  if (!(tokens_per_word > 0.0) || !std::isfinite(tokens_per_word)) {
    throw Error(ErrorCode::InvalidArgument, "tokens_per_word must be > 0");
  }
  if (remote) {
    if (remote->url.empty()) throw Error(ErrorCode::InvalidArgument, "remote encoder url is empty");
    if (remote->timeout_ms < 1) throw Error(ErrorCode::InvalidArgument, "remote timeout must be >= 1 ms");
    if (remote->max_in_flight < 1) throw Error(ErrorCode::InvalidArgument, "max_in_flight must be >= 1");
  }
}

std::uint64_t hash64(std::string_view word, std::uint64_t seed) noexcept {
  constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t h = kOffsetBasis ^ seed;
  for (char c : word) {
    h ^= static_cast<unsigned char>(c);
    h *= kPrime;
  }
  return h;
}

std::vector<std::string> encoding_words(const EncodeRequest& req, const EncoderConfig& cfg) {
  const std::string* title = nullptr;
  const std::string* abstract = nullptr;
  for (const auto& p : req.parts) {
    if (p.key == PartKey::Title) title = &p.value;
    if (p.key == PartKey::Abstract) abstract = &p.value;
  }
  auto blank = [](const std::string* s) {
    return s == nullptr || std::all_of(s->begin(), s->end(), [](unsigned char c) { return std::isspace(c); });
  };
  if (blank(title) && blank(abstract)) {
    throw Error(ErrorCode::EmptyDocument, "document '" + req.id + "' has no title or abstract text");
  }
  // Title and abstract are joined with a single space.
  std::string text;
  if (title) text += *title;
  if (abstract) {
    if (!text.empty()) text += ' ';
    text += *abstract;
  }
  auto words = word_tokenize(text);
  if (words.empty()) {
    throw Error(ErrorCode::AllWordsFiltered, "document '" + req.id + "' has no words after tokenization");
  }
  return truncate_to_budget(std::move(words), cfg);
}

Embedding encode(const EncodeRequest& req, const EncoderConfig& cfg) {
  const auto words = encoding_words(req, cfg);
  std::vector<double> components(cfg.dim, 0.0);
  for (const auto& w : words) {
    const std::uint64_t h = hash64(w, cfg.hash_seed);
    const std::size_t bucket = static_cast<std::size_t>(h % cfg.dim);
    components[bucket] += (h >> 63) == 0 ? 1.0 : -1.0;
  }
  double sum = 0.0;
  for (double v : components) sum += v * v;
  if (sum == 0.0) {
    // Every word cancelled out against another in the same bucket.
    throw Error(ErrorCode::AllWordsFiltered, "document '" + req.id + "' hashes to a zero vector");
  }
  const double norm = std::sqrt(sum);
  for (double& v : components) v /= norm;
  return Embedding(std::move(components));
}

namespace {

void check_distinct_ids(std::span<const EncodeRequest> reqs) {
  std::set<std::string_view> seen;
  for (const auto& r : reqs) {
    if (!seen.insert(r.id).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate request id '" + r.id + "'");
    }
  }
}

}  // namespace

std::vector<EncodeOutcome> encode_batch(std::span<const EncodeRequest> reqs, const EncoderConfig& cfg) {
  check_distinct_ids(reqs);
  std::vector<EncodeOutcome> out(reqs.size());
  const auto n = static_cast<std::ptrdiff_t>(reqs.size());
#pragma omp parallel for schedule(dynamic, 8) if (reqs.size() > 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i].id = reqs[i].id;
    try {
      out[i].embedding = encode(reqs[i], cfg);
    } catch (const Error& e) {
      out[i].error = e;
    }
  }
  return out;
}

Encoder::Encoder(EncoderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.remote) remote_ = std::make_shared<RemoteEncoder>(cfg_);
}

Embedding Encoder::encode(const EncodeRequest& req) const {
  if (!remote_) return encoder::encode(req, cfg_);
  // Surface the same input errors as the local backend before going remote.
  encoding_words(req, cfg_);
  auto result = remote_->encode(std::span<const EncodeRequest>(&req, 1));
  return std::move(result.front().second);
}

std::vector<EncodeOutcome> Encoder::encode_batch(std::span<const EncodeRequest> reqs) const {
  if (!remote_) return encoder::encode_batch(reqs, cfg_);
  check_distinct_ids(reqs);
  std::vector<EncodeOutcome> out(reqs.size());
  std::vector<EncodeRequest> valid;
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    out[i].id = reqs[i].id;
    try {
      encoding_words(reqs[i], cfg_);
      valid.push_back(reqs[i]);
      slots.push_back(i);
    } catch (const Error& e) {
      out[i].error = e;
    }
  }
  if (!valid.empty()) {
    auto results = remote_->encode(valid);
    for (std::size_t k = 0; k < slots.size(); ++k) out[slots[k]].embedding = std::move(results[k].second);
  }
  return out;
}

}  // namespace millstone::encoder
