#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "millstone/ann.hpp"

namespace millstone::ann {

double percentile(std::vector<double> samples, double p) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(samples.size())));
  return samples[std::clamp<std::size_t>(rank, 1, samples.size()) - 1];
}

RecallBenchResult run_recall_bench(const RecallBenchConfig& cfg) {
  if (cfg.n == 0 || cfg.queries == 0 || cfg.k == 0 || cfg.dim == 0 || cfg.ef_values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "bench needs n, queries, k, dim > 0 and at least one ef");
  }
  std::vector<Embedding> corpus;
  std::vector<Embedding> queries;
  if (cfg.distribution == BenchDistribution::Latent) {
    const LatentCorpusModel model(cfg.dim);
    corpus = model.sample(cfg.n, cfg.seed);
    queries = model.sample(cfg.queries, cfg.seed + 1);
  } else {
    corpus = random_unit_vectors(cfg.n, cfg.dim, cfg.seed);
    queries = random_unit_vectors(cfg.queries, cfg.dim, cfg.seed + 1);
  }

  RecallBenchResult result;
  HnswIndex index(cfg.dim, cfg.hnsw);
  FlatStore flat(cfg.dim);
  const auto started = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::string id = "v" + std::to_string(i);
    index.insert(id, corpus[i]);
    flat.add(id, corpus[i]);
  }
  result.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  std::vector<std::vector<SearchHit>> exact;
  for (const auto& q : queries) exact.push_back(exact_search(flat, q, cfg.k));

  for (const std::size_t ef : cfg.ef_values) {
    std::vector<std::vector<SearchHit>> approx;
    std::vector<double> latencies;
    for (const auto& q : queries) {
      const auto t0 = std::chrono::steady_clock::now();
      approx.push_back(index.search(q, cfg.k, ef));
      latencies.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    result.rows.push_back({ef, recall_at_k(approx, exact), percentile(latencies, 50), percentile(latencies, 95)});
  }
  return result;
}

std::string recall_csv(const std::vector<RecallRow>& rows) {
  std::string out = "ef,recall_at_k,p50_ms,p95_ms\n";
  char line[128];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%zu,%.4f,%.3f,%.3f\n", r.ef, r.recall, r.p50_ms, r.p95_ms);
    out += line;
  }
  return out;
}

}  // namespace millstone::ann
