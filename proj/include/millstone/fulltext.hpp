#pragma once

// BM25 keyword search over document titles and abstracts.

#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "millstone/model.hpp"

namespace millstone::fulltext {

// Encoder tokenization minus a fixed 30-word English stopword list.
std::vector<std::string> analyze(std::string_view text);
bool is_stopword(std::string_view word) noexcept;

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Posting {
  DocumentKey key;
  std::uint32_t tf = 0;
};

struct KeywordHit {
  DocumentKey key;
  double score = 0.0;
};

// Thread-safe: concurrent searches, exclusive writers.
class InvertedIndex {
 public:
  explicit InvertedIndex(Bm25Params params = {}) : params_(params) {}

  // Indexes title + abstract. Throws DuplicateId.
  void index_document(const Document& doc);
  // Throws UnknownId.
  void remove_document(const DocumentKey& key);
  bool contains(const DocumentKey& key) const;

  // OR-of-terms BM25; collection statistics come from the filtered corpus
  // when a filter is given. Ties break by id, then corpus. Throws EmptyQuery.
  std::vector<KeywordHit> search(std::string_view query, const std::optional<CorpusId>& corpus,
                                 std::size_t k) const;

  std::size_t document_count(const std::optional<CorpusId>& corpus = std::nullopt) const;
  std::vector<Posting> postings(const std::string& term) const;  // sorted by key

 private:
  struct CorpusStats {
    std::size_t documents = 0;
    std::size_t total_length = 0;
  };

  Bm25Params params_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::vector<Posting>> postings_;
  std::map<DocumentKey, std::uint32_t> lengths_;
  std::map<DocumentKey, std::vector<std::string>> terms_of_;  // distinct terms, for removal
  std::map<CorpusId, CorpusStats> stats_;
};

}  // namespace millstone::fulltext
