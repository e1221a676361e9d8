#pragma once

// Hierarchical Navigable Small World index over unit-normalized embeddings
// (cosine similarity == dot product), plus an exhaustive exact search used as
// its oracle.

#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "millstone/model.hpp"

namespace millstone::ann {

struct HnswParams {
  std::size_t m = 16;                 // max neighbors on layers > 0
  std::size_t m0 = 32;                // max neighbors on layer 0
  std::size_t ef_construction = 200;  // beam width at insert
  std::size_t ef_search = 100;        // beam width at query
  double ml = 1.0 / std::log(16.0);   // level normalization
  std::uint64_t rng_seed = 42;

  // Defaults for a given m: m0 = 2m, ml = 1/ln(m).
  static HnswParams for_m(std::size_t m);
  // Throws Error(InvalidArgument).
  void validate() const;

  bool operator==(const HnswParams&) const = default;
};

struct SearchHit {
  std::string id;
  double score = 0.0;  // cosine similarity
  CorpusId index;

  bool operator==(const SearchHit&) const = default;
};

// Score descending, id ascending.
bool hit_before(const SearchHit& a, const SearchHit& b) noexcept;

// floor(-ln(u) * ml) for u in (0, 1].
std::size_t level_for(double u, double ml) noexcept;

// Seeded level draws. u is built from the top 53 bits of a mt19937_64 draw,
// so sequences are identical on every platform.
class LevelGenerator {
 public:
  LevelGenerator(std::uint64_t seed, double ml) : engine_(seed), ml_(ml) {}

  double next_uniform() noexcept;  // in (0, 1]
  std::size_t next() noexcept { return level_for(next_uniform(), ml_); }

  std::string state() const;
  void set_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
  double ml_;
};

// Not thread-safe; see ConcurrentHnsw for the reader-writer wrapper.
class HnswIndex {
 public:
  explicit HnswIndex(std::size_t dim, HnswParams params = {}, CorpusId corpus = {});

  std::size_t dim() const noexcept { return dim_; }
  const HnswParams& params() const noexcept { return params_; }
  const CorpusId& corpus() const noexcept { return corpus_; }
  std::size_t size() const noexcept { return slot_of_.size(); }
  bool empty() const noexcept { return slot_of_.empty(); }
  bool contains(const std::string& id) const { return slot_of_.contains(id); }

  // Throws DuplicateId, DimensionMismatch, NotNormalized.
  void insert(const std::string& id, const Embedding& e);
  // Throws UnknownId.
  void remove(const std::string& id);
  // Beam width is max(ef or params.ef_search, k). Throws EmptyIndex,
  // NotNormalized, DimensionMismatch.
  std::vector<SearchHit> search(const Embedding& query, std::size_t k,
                                std::optional<std::size_t> ef = std::nullopt) const;

  // Graph introspection.
  std::optional<std::string> entry_point() const;
  int max_layer() const noexcept { return max_layer_; }
  std::vector<std::string> ids() const;  // ascending
  std::size_t level_of(const std::string& id) const;
  std::vector<std::string> neighbors(const std::string& id, std::size_t layer) const;
  std::span<const double> vector_of(const std::string& id) const;

  // Same nodes, vectors, edges, entry point, params and generator state.
  bool graph_equal(const HnswIndex& other) const;

  // "MLHNSW01" + length-prefixed little-endian sections.
  std::string snapshot() const;
  // Throws CorruptSnapshot or VersionMismatch.
  static HnswIndex restore(std::string_view bytes);

 private:
  using Slot = std::uint32_t;
  struct Node {
    std::string id;
    std::size_t level = 0;
    std::vector<std::vector<Slot>> links;  // links[layer]
    bool alive = false;
  };
  struct Candidate {
    double sim;
    Slot slot;
  };

  const double* vec(Slot s) const noexcept { return vectors_.data() + static_cast<std::size_t>(s) * dim_; }
  double sim(const double* q, Slot s) const noexcept;
  std::size_t cap(std::size_t layer) const noexcept { return layer == 0 ? params_.m0 : params_.m; }
  void check_query(const Embedding& e) const;
  Slot greedy_descend(const double* q, Slot from, std::size_t top, std::size_t bottom) const;
  // Result sorted by similarity descending.
  std::vector<Candidate> search_layer(const double* q, const std::vector<Slot>& entries, std::size_t ef,
                                      std::size_t layer) const;
  void shrink(Slot owner, std::size_t layer);

  std::size_t dim_;
  HnswParams params_;
  CorpusId corpus_;
  std::vector<double> vectors_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, Slot> slot_of_;
  std::vector<Slot> free_slots_;
  std::int64_t entry_ = -1;
  int max_layer_ = -1;
  LevelGenerator levels_;
};

// Many readers or one writer. Readers never observe a half-inserted node.
// A waiting writer blocks new readers, so a steady query load cannot starve
// inserts.
class ConcurrentHnsw {
 public:
  explicit ConcurrentHnsw(HnswIndex index) : index_(std::move(index)) {}

  void insert(const std::string& id, const Embedding& e) {
    auto lock = write_lock();
    index_.insert(id, e);
  }
  void remove(const std::string& id) {
    auto lock = write_lock();
    index_.remove(id);
  }
  std::vector<SearchHit> search(const Embedding& q, std::size_t k,
                                std::optional<std::size_t> ef = std::nullopt) const {
    auto lock = read_lock();
    return index_.search(q, k, ef);
  }
  std::size_t size() const {
    auto lock = read_lock();
    return index_.size();
  }
  bool contains(const std::string& id) const {
    auto lock = read_lock();
    return index_.contains(id);
  }
  std::string snapshot() const {
    auto lock = read_lock();
    return index_.snapshot();
  }
  void read(const std::function<void(const HnswIndex&)>& fn) const {
    auto lock = read_lock();
    fn(index_);
  }

 private:
  std::shared_lock<std::shared_mutex> read_lock() const {
    std::lock_guard turn(turnstile_);
    return std::shared_lock(mutex_);
  }
  std::unique_lock<std::shared_mutex> write_lock() {
    std::lock_guard turn(turnstile_);
    return std::unique_lock(mutex_);
  }

  mutable std::mutex turnstile_;
  mutable std::shared_mutex mutex_;
  HnswIndex index_;
};

// Row-major matrix of stored vectors for exhaustive scans.
class FlatStore {
 public:
  explicit FlatStore(std::size_t dim, CorpusId corpus = {}) : dim_(dim), corpus_(std::move(corpus)) {}

  void add(std::string id, const Embedding& e);
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const CorpusId& corpus() const noexcept { return corpus_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const double* data() const noexcept { return data_.data(); }
  const std::vector<double>& norms() const noexcept { return norms_; }

 private:
  std::size_t dim_;
  CorpusId corpus_;
  std::vector<std::string> ids_;
  std::vector<double> data_;
  std::vector<double> norms_;
};

// Exact top-k by cosine; same ordering rules as HnswIndex::search.
// Throws EmptyIndex, DimensionMismatch, ZeroVector.
std::vector<SearchHit> exact_search(const FlatStore& store, const Embedding& query, std::size_t k);
// Single-threaded reference of the same scan.
std::vector<SearchHit> exact_search_serial(const FlatStore& store, const Embedding& query, std::size_t k);

// Fraction of each exact top-k found by the approximate top-k, averaged.
double recall_at_k(const std::vector<std::vector<SearchHit>>& approx,
                   const std::vector<std::vector<SearchHit>>& exact);

// Seeded Gaussian-direction unit vectors, identical on every platform.
std::vector<Embedding> random_unit_vectors(std::size_t count, std::size_t dim, std::uint64_t seed);

// Document-like corpus: x = normalize(B z / sqrt(r) + noise * g / sqrt(dim)) where B holds r
// seeded random unit directions (the "topics"), z ~ N(0, I_r) and g ~ N(0, I_dim).
// Embeddings of real text concentrate near such a low-dimensional subspace;
// isotropic random vectors in 768 dimensions have no near neighbors to find.
class LatentCorpusModel {
 public:
  LatentCorpusModel(std::size_t dim, std::size_t latent_dim = 32, double noise = 0.25,
                    std::uint64_t basis_seed = 7);

  std::vector<Embedding> sample(std::size_t count, std::uint64_t seed) const;

 private:
  std::size_t dim_;
  std::size_t latent_dim_;
  double noise_;
  std::vector<Embedding> basis_;
};

}  // namespace millstone::ann

namespace millstone::ann {

enum class BenchDistribution { Latent, Uniform };

// Recall/latency sweep over a seeded synthetic corpus: the corpus is drawn
// with `seed`, the queries with `seed + 1`, and every ef is measured on the
// same index.
struct RecallBenchConfig {
  std::size_t n = 20000;
  std::size_t queries = 100;
  std::size_t k = 10;
  std::vector<std::size_t> ef_values = {10, 50, 100, 200};
  std::uint64_t seed = 1;
  std::size_t dim = kDefaultDim;
  BenchDistribution distribution = BenchDistribution::Latent;
  HnswParams hnsw;
};

struct RecallRow {
  std::size_t ef = 0;
  double recall = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
};

struct RecallBenchResult {
  std::vector<RecallRow> rows;
  double build_seconds = 0.0;
};

// Throws Error(InvalidArgument) for zero sizes or an empty ef list.
RecallBenchResult run_recall_bench(const RecallBenchConfig& cfg);

// Nearest-rank percentile of unsorted samples, p in [0, 100].
double percentile(std::vector<double> samples, double p);

// "ef,recall_at_k,p50_ms,p95_ms" header plus one line per row.
std::string recall_csv(const std::vector<RecallRow>& rows);

}  // namespace millstone::ann
