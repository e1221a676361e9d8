#include <omp.h>

#include "millstone/kernels.hpp"
#include "millstone/metrics.hpp"

namespace millstone::kernels::omp {

void pairwise(std::span<const Embedding> sources, std::span<const Embedding> targets,
              SimilarityMetric metric, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(sources.size());
  const std::size_t cols = targets.size();
  // Small matrices are not worth a thread team.
  const bool parallel = sources.size() * cols * sources.front().dim() > (1u << 16);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[static_cast<std::size_t>(i) * cols + j] =
          metrics::evaluate(metric, sources[i].values(), targets[j].values());
    }
  }
}

void dot_scan(const double* rows, std::size_t count, std::size_t dim, const double* query,
              std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static) if (count * dim > (1u << 16))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = dot(rows + static_cast<std::size_t>(i) * dim, query, dim);
  }
}

}  // namespace millstone::kernels::omp
