#pragma once

#include <string_view>

#include "sparse_dfe/common.hpp"
#include "sparse_dfe/constellation.hpp"
#include "sparse_dfe/random.hpp"

namespace sparse_dfe {

enum class Spreading { DFT, Hadamard, Haar, Gaussian };

std::string_view to_string(Spreading s);
Spreading parse_spreading(std::string_view token);

// DFT, Hadamard and Haar spreading matrices are unitary; Gaussian is not.
constexpr bool is_unitary(Spreading s) noexcept { return s != Spreading::Gaussian; }

// Randomly drawn families need a fresh realization per trial.
constexpr bool is_random(Spreading s) noexcept {
  return s == Spreading::Haar || s == Spreading::Gaussian;
}

bool is_power_of_two(long m) noexcept;

// Throws ConfigError when (kind, m) cannot be constructed.
void validate_spreading(Spreading kind, long m);

// One realization of y = H U x + w in the frequency domain.
struct SystemInstance {
  CVector h;        // diagonal of H
  CMatrix U;        // spreading matrix
  CMatrix A;        // H U
  CVector x_true;   // transmitted symbol values
  HardDecision symbols;  // transmitted symbol indices
  CVector y;
  double sigma2 = 0.0;  // E|w_i|^2
  Spreading spreading = Spreading::DFT;
  // Set by the producer when U is known to be unitary, which enables the
  // diagonal closed form of the linear equalizers on the full system.
  bool unitary_spreading = false;
  const Constellation* constellation = nullptr;

  Eigen::Index m() const noexcept { return A.cols(); }
};

// Rayleigh block-fading diagonal, rescaled so that sum |h_k|^2 = m exactly.
CVector make_channel(long m, Rng& rng);

// DFT:      e^{-2 pi i jk/m} / sqrt(m)
// Hadamard: Sylvester construction scaled by 1/sqrt(m); m a power of two
// Haar:     Q of a complex Ginibre QR with diag(R) made real positive
// Gaussian: i.i.d. real N(0,1) entries, every column scaled to unit norm
CMatrix make_spreading(Spreading kind, long m, Rng& rng);

// y = diag(h) U x + w with w ~ CN(0, sigma2 I).
SystemInstance transmit(const CVector& h, const CMatrix& U, const CVector& x_true,
                        double sigma2, Rng& rng);

// Draws a fresh channel (identity for Gaussian spreading, which models CDMA
// under perfect power control), fresh uniform symbols and fresh noise. When
// `fixed_spreading` is non-null it is used instead of drawing U.
SystemInstance draw_instance(Spreading kind, long m, const Constellation& c, double sigma2,
                             Rng& rng, const CMatrix* fixed_spreading = nullptr);

// sigma2 = Es / 10^(snr_db/10) with Es = 1 (unit-energy alphabets).
double snr_to_sigma2(double snr_db) noexcept;

}  // namespace sparse_dfe
