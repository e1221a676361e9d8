#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <set>

#include "millstone/encoder.hpp"
#include "millstone/fulltext.hpp"

namespace millstone::fulltext {

namespace {

constexpr std::array<std::string_view, 30> kStopwords = {
    "a",    "an",   "and",  "are",   "as",    "at",    "be",   "but",  "by",   "for",
    "if",   "in",   "is",   "it",    "no",    "not",   "of",   "on",   "or",   "that",
    "the",  "their", "there", "these", "they", "this",  "to",   "was",  "will", "with",
};

}  // namespace

bool is_stopword(std::string_view word) noexcept {
  return std::find(kStopwords.begin(), kStopwords.end(), word) != kStopwords.end();
}

std::vector<std::string> analyze(std::string_view text) {
  auto words = encoder::word_tokenize(text);
  std::erase_if(words, [](const std::string& w) { return is_stopword(w); });
  return words;
}

void InvertedIndex::index_document(const Document& doc) {
  const DocumentKey key{doc.corpus, doc.id};
  std::unique_lock lock(mutex_);
  if (lengths_.contains(key)) {
    throw Error(ErrorCode::DuplicateId, "document '" + doc.id + "' already indexed in " + doc.corpus.name());
  }
  std::vector<std::string> terms;
  for (PartKey part : {PartKey::Title, PartKey::Abstract}) {
    if (const auto* text = doc.part(part)) {
      auto t = analyze(*text);
      terms.insert(terms.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
    }
  }
  std::map<std::string, std::uint32_t> tf;
  for (const auto& t : terms) ++tf[t];

  std::vector<std::string> distinct;
  for (const auto& [term, count] : tf) {
    auto& list = postings_[term];
    auto pos = std::lower_bound(list.begin(), list.end(), key,
                                [](const Posting& p, const DocumentKey& k) { return p.key < k; });
    list.insert(pos, Posting{key, count});
    distinct.push_back(term);
  }
  lengths_.emplace(key, static_cast<std::uint32_t>(terms.size()));
  terms_of_.emplace(key, std::move(distinct));
  auto& s = stats_[doc.corpus];
  ++s.documents;
  s.total_length += terms.size();
}

void InvertedIndex::remove_document(const DocumentKey& key) {
  std::unique_lock lock(mutex_);
  auto it = lengths_.find(key);
  if (it == lengths_.end()) throw Error(ErrorCode::UnknownId, "document '" + key.id + "' is not indexed");
  for (const auto& term : terms_of_.at(key)) {
    auto& list = postings_.at(term);
    std::erase_if(list, [&](const Posting& p) { return p.key == key; });
    if (list.empty()) postings_.erase(term);
  }
  auto& s = stats_.at(key.corpus);
  --s.documents;
  s.total_length -= it->second;
  if (s.documents == 0) stats_.erase(key.corpus);
  lengths_.erase(it);
  terms_of_.erase(key);
}

bool InvertedIndex::contains(const DocumentKey& key) const {
  std::shared_lock lock(mutex_);
  return lengths_.contains(key);
}

std::size_t InvertedIndex::document_count(const std::optional<CorpusId>& corpus) const {
  std::shared_lock lock(mutex_);
  if (!corpus) return lengths_.size();
  auto it = stats_.find(*corpus);
  return it == stats_.end() ? 0 : it->second.documents;
}

std::vector<Posting> InvertedIndex::postings(const std::string& term) const {
  std::shared_lock lock(mutex_);
  auto it = postings_.find(term);
  return it == postings_.end() ? std::vector<Posting>{} : it->second;
}

std::vector<KeywordHit> InvertedIndex::search(std::string_view query, const std::optional<CorpusId>& corpus,
                                              std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  const auto analyzed = analyze(query);
  if (analyzed.empty()) throw Error(ErrorCode::EmptyQuery, "query has no searchable terms");
  const std::set<std::string> terms(analyzed.begin(), analyzed.end());

  std::shared_lock lock(mutex_);
  std::size_t n_docs = 0;
  std::size_t total_length = 0;
  for (const auto& [c, s] : stats_) {
    if (corpus && c != *corpus) continue;
    n_docs += s.documents;
    total_length += s.total_length;
  }
  if (n_docs == 0) return {};
  const double avgdl = static_cast<double>(total_length) / static_cast<double>(n_docs);

  std::map<DocumentKey, double> scores;
  for (const auto& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    std::size_t df = 0;
    for (const auto& p : it->second) {
      if (!corpus || p.key.corpus == *corpus) ++df;
    }
    if (df == 0) continue;
    const double idf = std::log(1.0 + (static_cast<double>(n_docs) - static_cast<double>(df) + 0.5) /
                                          (static_cast<double>(df) + 0.5));
    for (const auto& p : it->second) {
      if (corpus && p.key.corpus != *corpus) continue;
      const double tf = p.tf;
      const double len = lengths_.at(p.key);
      const double norm = params_.k1 * (1.0 - params_.b + params_.b * (avgdl > 0.0 ? len / avgdl : 0.0));
      scores[p.key] += idf * tf * (params_.k1 + 1.0) / (tf + norm);
    }
  }

  std::vector<KeywordHit> hits;
  hits.reserve(scores.size());
  for (const auto& [key, score] : scores) hits.push_back({key, score});
  auto before = [](const KeywordHit& a, const KeywordHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.key.id != b.key.id) return a.key.id < b.key.id;
    return a.key.corpus < b.key.corpus;
  };
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), before);
  hits.resize(keep);
  return hits;
}

}  // namespace millstone::fulltext
