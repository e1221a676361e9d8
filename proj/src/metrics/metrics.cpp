#include "millstone/metrics.hpp"

#include <cmath>

#include "millstone/kernels.hpp"

namespace millstone::metrics {

namespace {

void check_dims(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "dimension mismatch: " + std::to_string(a.size()) +
                                                  " vs " + std::to_string(b.size()));
  }
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
  check_dims(a, b);
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) {
    throw Error(ErrorCode::ZeroVector, "cosine similarity is undefined for a zero vector");
  }
  return dot / (std::sqrt(aa) * std::sqrt(bb));
}

double l1(std::span<const double> a, std::span<const double> b) {
  check_dims(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

double l2(std::span<const double> a, std::span<const double> b) {
  check_dims(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = b[i] - a[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double evaluate(SimilarityMetric metric, std::span<const double> a, std::span<const double> b) {
  switch (metric) {
    case SimilarityMetric::Cosine: return cosine(a, b);
    case SimilarityMetric::L1: return l1(a, b);
    case SimilarityMetric::L2: return l2(a, b);
  }
  throw Error(ErrorCode::UnknownMetric, "unknown metric");
}

SimilarityMatrix pairwise(std::span<const Embedding> sources, std::span<const Embedding> targets,
                          SimilarityMetric metric, std::vector<std::string> source_ids,
                          std::vector<std::string> target_ids) {
  if (sources.empty() || targets.empty()) {
    throw Error(ErrorCode::EmptyInput, "pairwise needs at least one source and one target");
  }
  const std::size_t dim = sources.front().dim();
  for (const auto* list : {&sources, &targets}) {
    for (const auto& e : *list) {
      if (e.dim() != dim) {
        throw Error(ErrorCode::DimensionMismatch,
                    "pairwise inputs must share one dimension (" + std::to_string(dim) + ")");
      }
      if (metric == SimilarityMetric::Cosine && e.norm() == 0.0) {
        throw Error(ErrorCode::ZeroVector, "cosine similarity is undefined for a zero vector");
      }
    }
  }
  auto label = [](std::vector<std::string>& ids, std::size_t n) {
    if (ids.empty()) {
      for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
    } else if (ids.size() != n) {
      throw Error(ErrorCode::InvalidArgument, "id list does not match embedding list");
    }
  };
  label(source_ids, sources.size());
  label(target_ids, targets.size());

  SimilarityMatrix m;
  m.metric = metric;
  m.source_ids = std::move(source_ids);
  m.target_ids = std::move(target_ids);
  m.values.resize(sources.size() * targets.size());
  kernels::omp::pairwise(sources, targets, metric, m.values);
  return m;
}

}  // namespace millstone::metrics
