#pragma once

// Shared handles behind the ETL pipelines and the query API: the document
// store, one HNSW index per corpus, the keyword index and the encoder.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include "millstone/ann.hpp"
#include "millstone/encoder.hpp"
#include "millstone/fulltext.hpp"
#include "millstone/store.hpp"

namespace millstone {

struct EngineConfig {
  std::filesystem::path store_root;
  encoder::EncoderConfig encoder;
  ann::HnswParams hnsw;
  store::StoreOptions store;
  bool load_snapshots = true;
};

enum class LoadOutcome { Inserted, Replaced, Unchanged };

class Engine {
 public:
  // Opens the store and rebuilds (or restores) every corpus index.
  explicit Engine(EngineConfig config);

  const EngineConfig& config() const noexcept { return config_; }
  store::Store& store() noexcept { return *store_; }
  const store::Store& store() const noexcept { return *store_; }
  const encoder::Encoder& encoder() const noexcept { return encoder_; }
  const fulltext::InvertedIndex& keyword_index() const noexcept { return keywords_; }

  // Upserts into the store. Documents with an embedding are (re)indexed in
  // the corpus ANN index and the keyword index; documents without one are
  // store-only and removed from both indexes if present.
  LoadOutcome load(const Document& doc);

  // Corpora known to the store, as CorpusIds.
  std::vector<CorpusId> corpora() const;
  bool has_corpus(const CorpusId& corpus) const;
  // Throws UnknownIndex.
  CorpusId resolve_index(std::string_view index_name) const;

  // Null when the corpus has no indexed documents.
  const ann::ConcurrentHnsw* ann_index(const CorpusId& corpus) const;
  std::size_t indexed_count(const CorpusId& corpus) const;

  std::optional<Document> document(const CorpusId& corpus, const std::string& id) const {
    return store_->get(corpus, id);
  }

  // Writes <root>/<corpus>/ann.snapshot for every corpus.
  void save_snapshots() const;
  static std::filesystem::path snapshot_path(const std::filesystem::path& root, const CorpusId& corpus);

 private:
  ann::ConcurrentHnsw& ann_for_write(const CorpusId& corpus);
  void rebuild(const CorpusId& corpus);

  EngineConfig config_;
  std::unique_ptr<store::Store> store_;
  encoder::Encoder encoder_;
  fulltext::InvertedIndex keywords_;
  mutable std::shared_mutex mutex_;
  std::map<CorpusId, std::unique_ptr<ann::ConcurrentHnsw>> ann_;
};

}  // namespace millstone
