#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sparse_dfe/common.hpp"

namespace sparse_dfe {

enum class Modulation { BPSK, QPSK, QAM16 };

std::string_view to_string(Modulation m);
// Parses the CLI token `bpsk | qpsk | qam16`; throws ConfigError otherwise.
Modulation parse_modulation(std::string_view token);

// Detected symbols, stored as indices into Constellation::points().
struct HardDecision {
  std::vector<int> symbols;

  std::size_t size() const noexcept { return symbols.size(); }
  bool operator==(const HardDecision&) const = default;
};

// A unit-average-energy symbol alphabet with Gray labels.
//
// Point i carries bit label i, so the label of a point is its index written
// in bits_per_symbol() bits, most significant bit first. Labels are assigned
// so that nearest neighbours differ in exactly one bit:
//   BPSK   0 -> +1, 1 -> -1
//   QPSK   (b0 b1): Re sign from b0, Im sign from b1, scaled by 1/sqrt(2)
//   QAM16  (b0 b1 | b2 b3): each axis is Gray 4-PAM
//          00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3, scaled by 1/sqrt(10)
// Immutable after construction; the shared instances returned by get() are
// safe to use from any thread.
class Constellation {
 public:
  static const Constellation& get(Modulation kind);

  Modulation kind() const noexcept { return kind_; }
  std::span<const cplx> points() const noexcept { return points_; }
  int size() const noexcept { return static_cast<int>(points_.size()); }
  int bits_per_symbol() const noexcept { return bits_per_symbol_; }
  std::uint32_t label(int index) const { return static_cast<std::uint32_t>(index); }
  cplx point(int index) const { return points_.at(static_cast<std::size_t>(index)); }

  // Minimum Euclidean distance between two distinct points.
  double s_min() const noexcept { return s_min_; }
  // Half-width of the per-axis box that is the convex hull of the alphabet.
  double box_bound() const noexcept { return box_bound_; }

  // Index of the point nearest to v; exact ties go to the lowest index.
  int nearest(cplx v) const noexcept;

  // Symbol values of a decision vector.
  CVector values(const HardDecision& d) const;
  CVector values(std::span<const int> symbols) const;

 private:
  explicit Constellation(Modulation kind);

  Modulation kind_;
  int bits_per_symbol_ = 0;
  std::vector<cplx> points_;
  double s_min_ = 0.0;
  double box_bound_ = 0.0;
};

// Maps groups of bits_per_symbol() bits (MSB first) to points.
// Throws ShapeError if bits.size() is not a multiple of bits_per_symbol().
CVector modulate(std::span<const std::uint8_t> bits, const Constellation& c);

// Same mapping, returning symbol indices instead of values.
HardDecision bits_to_symbols(std::span<const std::uint8_t> bits, const Constellation& c);

std::vector<std::uint8_t> symbols_to_bits(const HardDecision& d, const Constellation& c);

// Coefficient-wise nearest-point detection.
HardDecision detect(const CVector& soft, const Constellation& c);

// Hamming distance between the concatenated bit labels of a and b.
long count_bit_errors(const HardDecision& a, const HardDecision& b, const Constellation& c);

long count_symbol_errors(const HardDecision& a, const HardDecision& b);

}  // namespace sparse_dfe
