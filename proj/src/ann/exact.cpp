#include <algorithm>
#include <set>

#include "millstone/ann.hpp"
#include "millstone/kernels.hpp"

namespace millstone::ann {

void FlatStore::add(std::string id, const Embedding& e) {
  if (e.dim() != dim_) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected dimension " + std::to_string(dim_) + ", got " + std::to_string(e.dim()));
  }
  const double n = e.norm();
  if (n == 0.0) throw Error(ErrorCode::ZeroVector, "cannot store a zero vector for cosine search");
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), e.values().begin(), e.values().end());
  norms_.push_back(n);
}

namespace {

using ScanFn = void (*)(const double*, std::size_t, std::size_t, const double*, std::span<double>);

std::vector<SearchHit> scan_top_k(const FlatStore& store, const Embedding& query, std::size_t k, ScanFn scan) {
  if (store.size() == 0) throw Error(ErrorCode::EmptyIndex, "store is empty");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (query.dim() != store.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected dimension " + std::to_string(store.dim()) + ", got " + std::to_string(query.dim()));
  }
  const double qn = query.norm();
  if (qn == 0.0) throw Error(ErrorCode::ZeroVector, "query is a zero vector");

  std::vector<double> dots(store.size());
  scan(store.data(), store.size(), store.dim(), query.values().data(), dots);

  std::vector<SearchHit> hits(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    hits[i] = {store.ids()[i], dots[i] / (store.norms()[i] * qn), store.corpus()};
  }
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), hit_before);
  hits.resize(keep);
  return hits;
}

}  // namespace

std::vector<SearchHit> exact_search(const FlatStore& store, const Embedding& query, std::size_t k) {
  return scan_top_k(store, query, k, &kernels::omp::dot_scan);
}

std::vector<SearchHit> exact_search_serial(const FlatStore& store, const Embedding& query, std::size_t k) {
  return scan_top_k(store, query, k, &kernels::serial::dot_scan);
}

double recall_at_k(const std::vector<std::vector<SearchHit>>& approx,
                   const std::vector<std::vector<SearchHit>>& exact) {
  if (approx.size() != exact.size() || exact.empty()) {
    throw Error(ErrorCode::InvalidArgument, "recall needs matching, non-empty result lists");
  }
  double total = 0.0;
  for (std::size_t q = 0; q < exact.size(); ++q) {
    if (exact[q].empty()) {
      total += 1.0;
      continue;
    }
    std::set<std::string> truth;
    for (const auto& h : exact[q]) truth.insert(h.id);
    std::size_t found = 0;
    for (const auto& h : approx[q]) found += truth.count(h.id);
    total += static_cast<double>(found) / static_cast<double>(truth.size());
  }
  return total / static_cast<double>(exact.size());
}

}  // namespace millstone::ann
