#include "sparse_dfe/random.hpp"

#include <cmath>

namespace sparse_dfe {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> indices) noexcept {
  std::uint64_t h = mix64(master);
  for (std::uint64_t idx : indices) {
    h = mix64(h ^ mix64(idx + 0x632be59bd9b4e019ULL));
  }
  return h;
}

cplx complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double s = std::sqrt(variance / 2.0);
  const double re = n01(rng);
  const double im = n01(rng);
  return {s * re, s * im};
}

CVector complex_gaussian_vector(Rng& rng, Eigen::Index n, double variance) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double s = std::sqrt(variance / 2.0);
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = n01(rng);
    const double im = n01(rng);
    v[i] = {s * re, s * im};
  }
  return v;
}

}  // namespace sparse_dfe
