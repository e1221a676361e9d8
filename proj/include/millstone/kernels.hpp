#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP variant in kernels::omp with the same
// signature; tests compare the two and bench/ times them.

#include <cstddef>
#include <span>

#include "millstone/model.hpp"

namespace millstone::kernels {

// Dot product with four interleaved accumulators. Used by the ANN layer where
// vectors are unit-normalized; agrees with a sequential sum to ~1e-15.
double dot(const double* a, const double* b, std::size_t dim) noexcept;

namespace serial {

// out[i * targets.size() + j] = metric(sources[i], targets[j]).
// Callers validate dimensions beforehand.
void pairwise(std::span<const Embedding> sources, std::span<const Embedding> targets,
              SimilarityMetric metric, std::span<double> out);

// out[i] = dot(query, rows + i * dim) for i in [0, count).
void dot_scan(const double* rows, std::size_t count, std::size_t dim, const double* query,
              std::span<double> out);

}  // namespace serial

namespace omp {

void pairwise(std::span<const Embedding> sources, std::span<const Embedding> targets,
              SimilarityMetric metric, std::span<double> out);

void dot_scan(const double* rows, std::size_t count, std::size_t dim, const double* query,
              std::span<double> out);

}  // namespace omp

}  // namespace millstone::kernels
