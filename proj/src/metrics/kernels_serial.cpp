#include "millstone/kernels.hpp"
#include "millstone/metrics.hpp"

namespace millstone::kernels {

double dot(const double* a, const double* b, std::size_t dim) noexcept {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= dim; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < dim; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

namespace serial {

void pairwise(std::span<const Embedding> sources, std::span<const Embedding> targets,
              SimilarityMetric metric, std::span<double> out) {
  const std::size_t cols = targets.size();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = metrics::evaluate(metric, sources[i].values(), targets[j].values());
    }
  }
}

void dot_scan(const double* rows, std::size_t count, std::size_t dim, const double* query,
              std::span<double> out) {
  for (std::size_t i = 0; i < count; ++i) out[i] = dot(rows + i * dim, query, dim);
}

}  // namespace serial

}  // namespace millstone::kernels
