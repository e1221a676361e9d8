#include <cmath>
#include <numbers>
#include <random>

#include "millstone/ann.hpp"

namespace millstone::ann {

namespace {

// Box-Muller over raw mt19937_64 output; std::normal_distribution is not
// specified bit-for-bit across standard libraries.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;        // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

std::vector<Embedding> random_unit_vectors(std::size_t count, std::size_t dim, std::uint64_t seed) {
  Gaussian g(seed);
  std::vector<Embedding> out;
  out.reserve(count);
  std::vector<double> v(dim);
  while (out.size() < count) {
    double sum = 0.0;
    for (auto& x : v) {
      x = g.next();
      sum += x * x;
    }
    if (sum == 0.0) continue;
    const double n = std::sqrt(sum);
    std::vector<double> unit(dim);
    for (std::size_t i = 0; i < dim; ++i) unit[i] = v[i] / n;
    out.emplace_back(std::move(unit));
  }
  return out;
}

LatentCorpusModel::LatentCorpusModel(std::size_t dim, std::size_t latent_dim, double noise,
                                     std::uint64_t basis_seed)
    : dim_(dim), latent_dim_(latent_dim), noise_(noise), basis_(random_unit_vectors(latent_dim, dim, basis_seed)) {
  if (dim == 0 || latent_dim == 0 || noise < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "latent corpus model needs dim, latent_dim >= 1 and noise >= 0");
  }
}

std::vector<Embedding> LatentCorpusModel::sample(std::size_t count, std::uint64_t seed) const {
  Gaussian g(seed);
  const double topic_scale = 1.0 / std::sqrt(static_cast<double>(latent_dim_));
  const double noise_scale = noise_ / std::sqrt(static_cast<double>(dim_));
  std::vector<Embedding> out;
  out.reserve(count);
  while (out.size() < count) {
    std::vector<double> v(dim_, 0.0);
    for (const auto& topic : basis_) {
      const double weight = g.next() * topic_scale;
      for (std::size_t d = 0; d < dim_; ++d) v[d] += weight * topic[d];
    }
    for (auto& x : v) x += noise_scale * g.next();
    double sum = 0.0;
    for (double x : v) sum += x * x;
    if (sum == 0.0) continue;
    const double n = std::sqrt(sum);
    for (auto& x : v) x /= n;
    out.emplace_back(std::move(v));
  }
  return out;
}

}  // namespace millstone::ann
