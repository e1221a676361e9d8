#pragma once

// Durable document store keyed by (corpus, id).
//
// Layout:
//   <root>/LOCK                         single-writer lock (flock)
//   <root>/<corpus>/journal.log         append-only records, fsync'd per put
//   <root>/<corpus>/segments/NNNNNN.seg compacted records, id-ascending
//
// Every document is held decoded in memory once the store is open; the
// files are the system of record across restarts.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "millstone/model.hpp"

namespace millstone::store {

struct StoreOptions {
  std::size_t dim = kDefaultDim;       // embeddings must match
  bool sync = true;                    // fsync the journal on every put
  std::uint64_t max_bytes = 0;         // 0 = unlimited; beyond it puts fail with StorageFull
  std::size_t compact_threshold = 0;   // journal records before auto-compaction; 0 = never
};

// Record encoding shared by journal and segments:
//   u32 magic "MSR1" | u32 json length | u32 vector dim | u32 crc32(json + vector)
//   | json (canonical document without "vector") | dim x f64, little-endian
std::string encode_record(const Document& doc);

struct DecodedRecords {
  std::vector<Document> documents;
  std::size_t valid_bytes = 0;  // prefix that decoded cleanly
  bool torn_tail = false;       // trailing partial / unverifiable last record
};

// Throws CorruptRecord for damage before the last record.
DecodedRecords decode_records(std::string_view bytes);

class Store {
 public:
  // Throws LockHeld when another handle owns root, CorruptRecord, Io.
  explicit Store(std::filesystem::path root, StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::filesystem::path& root() const noexcept { return root_; }
  const StoreOptions& options() const noexcept { return options_; }

  // Upsert; durable once it returns. Throws InvalidArgument for documents
  // failing validate_document, StorageFull, Io.
  void put(const Document& doc);

  std::optional<Document> get(const CorpusId& corpus, const std::string& id) const;
  std::vector<std::pair<DocumentKey, std::optional<Document>>> get_many(std::span<const DocumentKey> keys) const;
  // Consistent snapshot, id-ascending. Throws UnknownCorpus.
  std::vector<Document> scan(const CorpusId& corpus) const;

  std::vector<CorpusId> corpora() const;
  bool has_corpus(const CorpusId& corpus) const;
  std::size_t size(const CorpusId& corpus) const;
  std::size_t size() const;
  // Bytes appended to the corpus journal since the last compaction.
  std::uint64_t journal_position(const CorpusId& corpus) const;

  // Rewrites the corpus into a new segment and empties its journal.
  void compact(const CorpusId& corpus);
  void compact_all();

 private:
  struct Corpus {
    std::map<std::string, Document> docs;
    int journal_fd = -1;
    std::uint64_t journal_bytes = 0;
    std::size_t journal_records = 0;
    std::uint64_t segment_bytes = 0;
    std::uint32_t next_segment = 1;
  };

  std::filesystem::path corpus_dir(const CorpusId& c) const { return root_ / c.name(); }
  void load_corpus(const CorpusId& c);
  Corpus& open_corpus(const CorpusId& c);
  void compact_locked(const CorpusId& c, Corpus& corpus);
  std::uint64_t total_bytes_locked() const;

  std::filesystem::path root_;
  StoreOptions options_;
  int lock_fd_ = -1;
  mutable std::shared_mutex mutex_;
  std::map<CorpusId, Corpus> corpora_;
};

}  // namespace millstone::store
