#include <cmath>

#include "millstone/encoder.hpp"

namespace millstone::encoder {

namespace {

bool is_word_byte(unsigned char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::vector<std::string> word_tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::size_t estimate_tokens(std::size_t word_count, const EncoderConfig& cfg) {
  const double product = static_cast<double>(word_count) * cfg.tokens_per_word;
  const double nearest = std::round(product);
  if (std::abs(product - nearest) <= 1e-9 * std::max(1.0, product)) {
    return static_cast<std::size_t>(nearest);
  }
  return static_cast<std::size_t>(std::ceil(product));
}

std::vector<std::string> truncate_to_budget(std::vector<std::string> words, const EncoderConfig& cfg) {
  std::size_t n = std::min<std::size_t>(
      words.size(),
      static_cast<std::size_t>(static_cast<double>(cfg.token_limit) / cfg.tokens_per_word));
  while (n < words.size() && estimate_tokens(n + 1, cfg) <= cfg.token_limit) ++n;
  while (n > 0 && estimate_tokens(n, cfg) > cfg.token_limit) --n;
  words.resize(n);
  return words;
}

}  // namespace millstone::encoder
