#include "sparse_dfe/constellation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace sparse_dfe {

namespace {

// Gray 4-PAM level for a 2-bit label.
double pam4_level(unsigned two_bits) {
  switch (two_bits & 3U) {
    case 0b00: return -3.0;
    case 0b01: return -1.0;
    case 0b11: return 1.0;
    default: return 3.0;  // 0b10
  }
}

}  // namespace

std::string_view to_string(Modulation m) {
  switch (m) {
    case Modulation::BPSK: return "bpsk";
    case Modulation::QPSK: return "qpsk";
    case Modulation::QAM16: return "qam16";
  }
  return "?";
}

Modulation parse_modulation(std::string_view token) {
  if (token == "bpsk") return Modulation::BPSK;
  if (token == "qpsk") return Modulation::QPSK;
  if (token == "qam16") return Modulation::QAM16;
  throw ConfigError("unknown constellation '" + std::string(token) +
                    "' (expected bpsk|qpsk|qam16)");
}

const Constellation& Constellation::get(Modulation kind) {
  static const Constellation bpsk(Modulation::BPSK);
  static const Constellation qpsk(Modulation::QPSK);
  static const Constellation qam16(Modulation::QAM16);
  switch (kind) {
    case Modulation::BPSK: return bpsk;
    case Modulation::QPSK: return qpsk;
    case Modulation::QAM16: return qam16;
  }
  throw ConfigError("invalid modulation");
}

Constellation::Constellation(Modulation kind) : kind_(kind) {
  switch (kind) {
    case Modulation::BPSK:
      bits_per_symbol_ = 1;
      points_ = {cplx{1.0, 0.0}, cplx{-1.0, 0.0}};
      break;
    case Modulation::QPSK: {
      bits_per_symbol_ = 2;
      const double a = 1.0 / std::sqrt(2.0);
      for (unsigned label = 0; label < 4; ++label) {
        const double re = (label & 0b10U) ? -a : a;
        const double im = (label & 0b01U) ? -a : a;
        points_.emplace_back(re, im);
      }
      break;
    }
    case Modulation::QAM16: {
      bits_per_symbol_ = 4;
      const double a = 1.0 / std::sqrt(10.0);
      for (unsigned label = 0; label < 16; ++label) {
        points_.emplace_back(a * pam4_level(label >> 2), a * pam4_level(label));
      }
      break;
    }
  }

  s_min_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      s_min_ = std::min(s_min_, std::abs(points_[i] - points_[j]));
    }
  }
  for (const cplx& p : points_) {
    box_bound_ = std::max({box_bound_, std::abs(p.real()), std::abs(p.imag())});
  }
}

int Constellation::nearest(cplx v) const noexcept {
  int best = 0;
  double best_d = std::norm(v - points_[0]);
  for (int i = 1; i < size(); ++i) {
    const double d = std::norm(v - points_[static_cast<std::size_t>(i)]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

CVector Constellation::values(const HardDecision& d) const { return values(d.symbols); }

CVector Constellation::values(std::span<const int> symbols) const {
  CVector out(static_cast<Eigen::Index>(symbols.size()));
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = point(symbols[i]);
  }
  return out;
}

HardDecision bits_to_symbols(std::span<const std::uint8_t> bits, const Constellation& c) {
  const auto bps = static_cast<std::size_t>(c.bits_per_symbol());
  if (bits.size() % bps != 0) {
    throw ShapeError("bit count " + std::to_string(bits.size()) +
                     " is not a multiple of bits per symbol " + std::to_string(bps));
  }
  HardDecision d;
  d.symbols.reserve(bits.size() / bps);
  for (std::size_t i = 0; i < bits.size(); i += bps) {
    int label = 0;
    for (std::size_t b = 0; b < bps; ++b) label = (label << 1) | (bits[i + b] & 1);
    d.symbols.push_back(label);
  }
  return d;
}

CVector modulate(std::span<const std::uint8_t> bits, const Constellation& c) {
  return c.values(bits_to_symbols(bits, c));
}

std::vector<std::uint8_t> symbols_to_bits(const HardDecision& d, const Constellation& c) {
  const int bps = c.bits_per_symbol();
  std::vector<std::uint8_t> bits;
  bits.reserve(d.size() * static_cast<std::size_t>(bps));
  for (int s : d.symbols) {
    const auto label = c.label(s);
    for (int b = bps - 1; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((label >> b) & 1U));
  }
  return bits;
}

HardDecision detect(const CVector& soft, const Constellation& c) {
  HardDecision d;
  d.symbols.resize(static_cast<std::size_t>(soft.size()));
  for (Eigen::Index i = 0; i < soft.size(); ++i) {
    d.symbols[static_cast<std::size_t>(i)] = c.nearest(soft[i]);
  }
  return d;
}

long count_bit_errors(const HardDecision& a, const HardDecision& b, const Constellation& c) {
  if (a.size() != b.size()) {
    throw ShapeError("count_bit_errors: length mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  long errors = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    errors += std::popcount(c.label(a.symbols[i]) ^ c.label(b.symbols[i]));
  }
  return errors;
}

long count_symbol_errors(const HardDecision& a, const HardDecision& b) {
  if (a.size() != b.size()) throw ShapeError("count_symbol_errors: length mismatch");
  long errors = 0;
  for (std::size_t i = 0; i < a.size(); ++i) errors += (a.symbols[i] != b.symbols[i]) ? 1 : 0;
  return errors;
}

}  // namespace sparse_dfe
