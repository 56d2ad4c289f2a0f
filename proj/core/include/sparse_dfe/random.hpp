#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "sparse_dfe/common.hpp"

namespace sparse_dfe {

using Rng = std::mt19937_64;

// splitmix64 finalizer; a bijective mixer on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for an independent stream identified by (master, indices...). The
// result depends only on the arguments, never on call order.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> indices) noexcept;

inline Rng make_stream(std::uint64_t master,
                       std::initializer_list<std::uint64_t> indices) {
  return Rng{derive_seed(master, indices)};
}

// Circular complex Gaussian with E|z|^2 = variance.
cplx complex_gaussian(Rng& rng, double variance = 1.0);

CVector complex_gaussian_vector(Rng& rng, Eigen::Index n, double variance = 1.0);

}  // namespace sparse_dfe
