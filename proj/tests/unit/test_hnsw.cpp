#include <doctest.h>

#include <atomic>
#include <cmath>
#include <functional>
#include <queue>
#include <set>
#include <thread>

#include "millstone/ann.hpp"

using namespace millstone;
using namespace millstone::ann;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

std::string id_of(std::size_t i) { return "v" + std::to_string(i); }

HnswIndex build(const std::vector<Embedding>& data, HnswParams params = {}) {
  HnswIndex index(data.front().dim(), params);
  for (std::size_t i = 0; i < data.size(); ++i) index.insert(id_of(i), data[i]);
  return index;
}

void check_invariants(const HnswIndex& index) {
  const auto& p = index.params();
  const auto ids = index.ids();
  REQUIRE(ids.size() == index.size());
  const std::set<std::string> alive(ids.begin(), ids.end());
  std::size_t top = 0;
  for (const auto& id : ids) {
    const std::size_t level = index.level_of(id);
    top = std::max(top, level);
    for (std::size_t layer = 0; layer <= level; ++layer) {
      const auto nbs = index.neighbors(id, layer);
      CHECK(nbs.size() <= (layer == 0 ? p.m0 : p.m));
      const std::set<std::string> distinct(nbs.begin(), nbs.end());
      CHECK(distinct.size() == nbs.size());
      for (const auto& nb : nbs) {
        CHECK(nb != id);
        REQUIRE(alive.contains(nb));
        CHECK(index.level_of(nb) >= layer);
      }
    }
  }
  if (!ids.empty()) {
    REQUIRE(index.entry_point().has_value());
    CHECK(index.level_of(*index.entry_point()) == top);
    CHECK(static_cast<std::size_t>(index.max_layer()) == top);
  }
}

// Nodes reachable from the entry point over layer-0 edges.
std::size_t reachable(const HnswIndex& index) {
  std::set<std::string> seen{*index.entry_point()};
  std::queue<std::string> todo;
  todo.push(*index.entry_point());
  while (!todo.empty()) {
    const auto id = todo.front();
    todo.pop();
    for (const auto& nb : index.neighbors(id, 0)) {
      if (seen.insert(nb).second) todo.push(nb);
    }
  }
  return seen.size();
}

double recall(const HnswIndex& index, const FlatStore& flat, const std::vector<Embedding>& queries, std::size_t k,
              std::size_t ef) {
  std::vector<std::vector<SearchHit>> approx, exact;
  for (const auto& q : queries) {
    approx.push_back(index.search(q, k, ef));
    exact.push_back(exact_search(flat, q, k));
  }
  return recall_at_k(approx, exact);
}

}  // namespace

TEST_SUITE("hnsw") {
  TEST_CASE("level draws follow the geometric law") {
    LevelGenerator gen(42, 1.0 / std::log(16.0));
    constexpr int n = 200000;
    int at_least_one = 0, at_least_two = 0;
    for (int i = 0; i < n; ++i) {
      const auto level = gen.next();
      at_least_one += level >= 1;
      at_least_two += level >= 2;
    }
    const double p1 = 1.0 / 16.0, p2 = 1.0 / 256.0;
    CHECK(std::abs(at_least_one - n * p1) <= 3 * std::sqrt(n * p1 * (1 - p1)));
    CHECK(std::abs(at_least_two - n * p2) <= 3 * std::sqrt(n * p2 * (1 - p2)));
    CHECK(level_for(1.0, 0.5) == 0);
    CHECK(level_for(std::exp(-2.0), 1.0) == 2);
  }

  TEST_CASE("generator state round trips") {
    LevelGenerator a(7, 0.3);
    for (int i = 0; i < 10; ++i) a.next();
    LevelGenerator b(0, 0.3);
    b.set_state(a.state());
    for (int i = 0; i < 100; ++i) CHECK(a.next_uniform() == b.next_uniform());
  }

  TEST_CASE("graph invariants on 1000 nodes") {
    const auto data = random_unit_vectors(1000, 32, 5);
    const auto index = build(data);
    check_invariants(index);
    CHECK(reachable(index) == 1000);
  }

  TEST_CASE("insert and search errors") {
    HnswIndex index(3);
    CHECK(code_of([&] { index.search(Embedding({1, 0, 0}), 1); }) == ErrorCode::EmptyIndex);
    index.insert("a", Embedding({1, 0, 0}));
    CHECK(code_of([&] { index.insert("a", Embedding({0, 1, 0})); }) == ErrorCode::DuplicateId);
    CHECK(code_of([&] { index.insert("b", Embedding({2, 0, 0})); }) == ErrorCode::NotNormalized);
    CHECK(code_of([&] { index.insert("b", Embedding({1, 0})); }) == ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { index.search(Embedding({1, 0}), 1); }) == ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { index.search(Embedding({1, 0, 0}), 0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { index.remove("zzz"); }) == ErrorCode::UnknownId);
    const auto hits = index.search(Embedding({1, 0, 0}), 5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].id == "a");
    CHECK(hits[0].score == doctest::Approx(1.0));
  }

  TEST_CASE("results are ordered by score then id") {
    HnswIndex index(2);
    const double s = std::sqrt(0.5);
    index.insert("b", Embedding({s, s}));
    index.insert("a", Embedding({s, s}));
    index.insert("c", Embedding({1, 0}));
    const auto hits = index.search(Embedding({s, s}), 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].id == "a");
    CHECK(hits[1].id == "b");
    CHECK(hits[2].id == "c");
  }

  TEST_CASE("recall on a clustered corpus") {
    const LatentCorpusModel model(64, 16, 0.25, 3);
    const auto data = model.sample(3000, 1);
    const auto queries = model.sample(50, 2);
    const auto index = build(data);
    FlatStore flat(64);
    for (std::size_t i = 0; i < data.size(); ++i) flat.add(id_of(i), data[i]);
    const double r10 = recall(index, flat, queries, 10, 10);
    const double r100 = recall(index, flat, queries, 10, 100);
    CHECK(r100 >= 0.95);
    CHECK(r100 >= r10);
  }

  TEST_CASE("removing 10% keeps the graph valid and recall high") {
    const LatentCorpusModel model(64, 16, 0.25, 3);
    const auto data = model.sample(5000, 11);
    const auto queries = model.sample(50, 12);
    auto index = build(data);
    std::set<std::string> removed;
    for (std::size_t i = 0; i < data.size(); i += 10) {
      index.remove(id_of(i));
      removed.insert(id_of(i));
    }
    CHECK(index.size() == 4500);
    check_invariants(index);
    FlatStore flat(64);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!removed.contains(id_of(i))) flat.add(id_of(i), data[i]);
    }
    CHECK(recall(index, flat, queries, 10, 100) >= 0.93);
    for (const auto& q : queries) {
      for (const auto& h : index.search(q, 10)) CHECK_FALSE(removed.contains(h.id));
    }
    // Freed slots are reused.
    index.insert("again", data[0]);
    CHECK(index.size() == 4501);
    CHECK(index.search(data[0], 1)[0].id == "again");
    check_invariants(index);
  }

  TEST_CASE("removing everything leaves an empty index") {
    const auto data = random_unit_vectors(50, 8, 1);
    auto index = build(data);
    for (std::size_t i = 0; i < data.size(); ++i) index.remove(id_of(i));
    CHECK(index.empty());
    CHECK_FALSE(index.entry_point().has_value());
    index.insert("x", data[3]);
    CHECK(index.search(data[3], 1)[0].id == "x");
  }

  TEST_CASE("snapshot round trip reproduces graph and results") {
    const auto data = random_unit_vectors(800, 16, 9);
    auto index = build(data);
    for (std::size_t i = 0; i < 40; ++i) index.remove(id_of(i * 3));
    const auto bytes = index.snapshot();
    auto restored = HnswIndex::restore(bytes);
    CHECK(restored.graph_equal(index));
    CHECK(restored.snapshot() == bytes);
    const auto queries = random_unit_vectors(50, 16, 10);
    for (const auto& q : queries) CHECK(restored.search(q, 10) == index.search(q, 10));
    // Further inserts make identical decisions on both.
    const auto more = random_unit_vectors(20, 16, 11);
    for (std::size_t i = 0; i < more.size(); ++i) {
      index.insert("m" + std::to_string(i), more[i]);
      restored.insert("m" + std::to_string(i), more[i]);
    }
    CHECK(restored.graph_equal(index));
  }

  TEST_CASE("damaged snapshots are rejected") {
    const auto index = build(random_unit_vectors(100, 8, 2));
    const auto bytes = index.snapshot();
    for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{8}, bytes.size() / 2, bytes.size() - 1}) {
      CHECK(code_of([&] { HnswIndex::restore(std::string_view(bytes).substr(0, cut)); }) ==
            ErrorCode::CorruptSnapshot);
    }
    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x40;
    CHECK(code_of([&] { HnswIndex::restore(flipped); }) == ErrorCode::CorruptSnapshot);
    auto future = bytes;
    future[7] = '2';
    CHECK(code_of([&] { HnswIndex::restore(future); }) == ErrorCode::VersionMismatch);
    CHECK(code_of([&] { HnswIndex::restore("not a snapshot at all"); }) == ErrorCode::CorruptSnapshot);
  }

  TEST_CASE("exact search kernels agree") {
    const auto data = random_unit_vectors(500, 24, 4);
    FlatStore flat(24);
    for (std::size_t i = 0; i < data.size(); ++i) flat.add(id_of(i), data[i]);
    for (const auto& q : random_unit_vectors(10, 24, 5)) {
      const auto a = exact_search(flat, q, 7);
      CHECK(a == exact_search_serial(flat, q, 7));
      for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].score >= a[i].score);
    }
  }

  TEST_CASE("concurrent readers with a writer") {
    const auto data = random_unit_vectors(600, 16, 21);
    ConcurrentHnsw index(HnswIndex(16));
    for (std::size_t i = 0; i < 300; ++i) index.insert(id_of(i), data[i]);
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::vector<std::thread> readers;
    for (int t = 0; t < 3; ++t) {
      readers.emplace_back([&, t] {
        std::size_t i = t;
        while (!done) {
          const auto hits = index.search(data[i % 300], 5);
          if (hits.empty() || hits.size() > 5) ++bad;
          i += 7;
        }
      });
    }
    for (std::size_t i = 300; i < 600; ++i) index.insert(id_of(i), data[i]);
    done = true;
    for (auto& r : readers) r.join();
    CHECK(bad == 0);
    CHECK(index.size() == 600);
  }
}
