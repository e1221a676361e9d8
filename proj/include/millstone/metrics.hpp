#pragma once

// Cosine similarity, Manhattan (L1) and Euclidean (L2) distances, plus the
// pairwise matrix used by the calculation endpoints.
//
// All scalar functions sum left to right over the component index; the
// pairwise matrix calls them unchanged, so its entries are bit-identical to
// nested scalar calls whichever kernel computes it.

#include <span>
#include <string>
#include <vector>

#include "millstone/model.hpp"

namespace millstone::metrics {

// Throws DimensionMismatch, or ZeroVector if either norm is zero.
double cosine(std::span<const double> a, std::span<const double> b);
// Throws DimensionMismatch.
double l1(std::span<const double> a, std::span<const double> b);
double l2(std::span<const double> a, std::span<const double> b);

double evaluate(SimilarityMetric metric, std::span<const double> a, std::span<const double> b);

inline double cosine(const Embedding& a, const Embedding& b) { return cosine(a.values(), b.values()); }
inline double l1(const Embedding& a, const Embedding& b) { return l1(a.values(), b.values()); }
inline double l2(const Embedding& a, const Embedding& b) { return l2(a.values(), b.values()); }

struct SimilarityMatrix {
  std::vector<std::string> source_ids;
  std::vector<std::string> target_ids;
  std::vector<double> values;  // row-major, rows = sources
  SimilarityMetric metric = SimilarityMetric::Cosine;

  std::size_t rows() const noexcept { return source_ids.size(); }
  std::size_t cols() const noexcept { return target_ids.size(); }
  double at(std::size_t row, std::size_t col) const { return values.at(row * cols() + col); }
};

// Throws EmptyInput, DimensionMismatch, or ZeroVector (cosine only).
// Ids are labels only; when empty they default to the positional index.
SimilarityMatrix pairwise(std::span<const Embedding> sources, std::span<const Embedding> targets,
                          SimilarityMetric metric, std::vector<std::string> source_ids = {},
                          std::vector<std::string> target_ids = {});

}  // namespace millstone::metrics
