#include "millstone/engine.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

namespace millstone {

namespace fs = std::filesystem;

namespace {

std::optional<std::string> read_optional(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Engine::Engine(EngineConfig config)
    : config_(std::move(config)), encoder_(config_.encoder) {
  config_.hnsw.validate();
  config_.store.dim = config_.encoder.dim;
  store_ = std::make_unique<store::Store>(config_.store_root, config_.store);
  for (const auto& corpus : store_->corpora()) rebuild(corpus);
}

fs::path Engine::snapshot_path(const fs::path& root, const CorpusId& corpus) {
  return root / corpus.name() / "ann.snapshot";
}

void Engine::rebuild(const CorpusId& corpus) {
  const auto docs = store_->scan(corpus);
  std::size_t embedded = 0;
  for (const auto& d : docs) {
    if (d.embedding) {
      keywords_.index_document(d);
      ++embedded;
    }
  }
  if (embedded == 0) return;

  // A snapshot is reused only if it holds exactly the embedded documents
  // with identical vectors; otherwise the graph is rebuilt id-ascending.
  if (config_.load_snapshots) {
    if (auto bytes = read_optional(snapshot_path(config_.store_root, corpus))) {
      try {
        auto restored = ann::HnswIndex::restore(*bytes);
        bool consistent = restored.size() == embedded && restored.dim() == config_.encoder.dim &&
                          restored.corpus() == corpus;
        for (std::size_t i = 0; consistent && i < docs.size(); ++i) {
          const auto& d = docs[i];
          if (!d.embedding) continue;
          if (!restored.contains(d.id)) {
            consistent = false;
            break;
          }
          const auto stored = restored.vector_of(d.id);
          const auto unit = d.embedding->normalized();
          consistent = std::equal(stored.begin(), stored.end(), unit.values().begin());
        }
        if (consistent) {
          ann_.emplace(corpus, std::make_unique<ann::ConcurrentHnsw>(std::move(restored)));
          return;
        }
      } catch (const Error&) {
        // Stale or damaged snapshot: fall through to a rebuild.
      }
    }
  }

  ann::HnswIndex index(config_.encoder.dim, config_.hnsw, corpus);
  for (const auto& d : docs) {
    if (d.embedding) index.insert(d.id, d.embedding->normalized());
  }
  ann_.emplace(corpus, std::make_unique<ann::ConcurrentHnsw>(std::move(index)));
}

ann::ConcurrentHnsw& Engine::ann_for_write(const CorpusId& corpus) {
  std::unique_lock lock(mutex_);
  auto it = ann_.find(corpus);
  if (it == ann_.end()) {
    it = ann_.emplace(corpus, std::make_unique<ann::ConcurrentHnsw>(
                                  ann::HnswIndex(config_.encoder.dim, config_.hnsw, corpus)))
             .first;
  }
  return *it->second;
}

LoadOutcome Engine::load(const Document& doc) {
  const auto previous = store_->get(doc.corpus, doc.id);
  if (previous && *previous == doc) return LoadOutcome::Unchanged;

  store_->put(doc);
  const DocumentKey key{doc.corpus, doc.id};
  auto& ann = ann_for_write(doc.corpus);
  if (ann.contains(doc.id)) ann.remove(doc.id);
  if (keywords_.contains(key)) keywords_.remove_document(key);
  if (doc.embedding) {
    ann.insert(doc.id, doc.embedding->normalized());
    keywords_.index_document(doc);
  }
  return previous ? LoadOutcome::Replaced : LoadOutcome::Inserted;
}

std::vector<CorpusId> Engine::corpora() const { return store_->corpora(); }

bool Engine::has_corpus(const CorpusId& corpus) const { return store_->has_corpus(corpus); }

CorpusId Engine::resolve_index(std::string_view index_name) const {
  CorpusId corpus = CorpusId::from_index_name(index_name);
  if (!has_corpus(corpus)) {
    throw Error(ErrorCode::UnknownIndex, "unknown index '" + std::string(index_name) + "'");
  }
  return corpus;
}

const ann::ConcurrentHnsw* Engine::ann_index(const CorpusId& corpus) const {
  std::shared_lock lock(mutex_);
  auto it = ann_.find(corpus);
  return it == ann_.end() || it->second->size() == 0 ? nullptr : it->second.get();
}

std::size_t Engine::indexed_count(const CorpusId& corpus) const {
  const auto* index = ann_index(corpus);
  return index ? index->size() : 0;
}

void Engine::save_snapshots() const {
  std::shared_lock lock(mutex_);
  for (const auto& [corpus, index] : ann_) {
    const auto path = snapshot_path(config_.store_root, corpus);
    const auto tmp = fs::path(path.string() + ".tmp");
    fs::create_directories(path.parent_path());
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      const auto bytes = index->snapshot();
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
  }
}

}  // namespace millstone
