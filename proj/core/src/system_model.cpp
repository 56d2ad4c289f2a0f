#include "sparse_dfe/system_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace sparse_dfe {

std::string_view to_string(Spreading s) {
  switch (s) {
    case Spreading::DFT: return "dft";
    case Spreading::Hadamard: return "hadamard";
    case Spreading::Haar: return "haar";
    case Spreading::Gaussian: return "gaussian";
  }
  return "?";
}

Spreading parse_spreading(std::string_view token) {
  if (token == "dft") return Spreading::DFT;
  if (token == "hadamard") return Spreading::Hadamard;
  if (token == "haar") return Spreading::Haar;
  if (token == "gaussian") return Spreading::Gaussian;
  throw ConfigError("unknown spreading '" + std::string(token) +
                    "' (expected dft|hadamard|haar|gaussian)");
}

bool is_power_of_two(long m) noexcept { return m > 0 && (m & (m - 1)) == 0; }

void validate_spreading(Spreading kind, long m) {
  if (m < 1) throw ShapeError("block length must be at least 1, got " + std::to_string(m));
  if (kind == Spreading::Hadamard && !is_power_of_two(m)) {
    throw ConfigError("hadamard spreading requires a power-of-two block length, got " +
                      std::to_string(m));
  }
}

CVector make_channel(long m, Rng& rng) {
  if (m < 1) throw ShapeError("make_channel: block length must be at least 1");
  CVector h = complex_gaussian_vector(rng, m);
  const double energy = h.squaredNorm();
  h *= std::sqrt(static_cast<double>(m) / energy);
  return h;
}

namespace {

CMatrix dft_matrix(long m) {
  CMatrix F(m, m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (long j = 0; j < m; ++j) {
    for (long k = 0; k < m; ++k) {
      // Reduce jk mod m first so the angle stays small and exact for large m.
      const long jk = (j * k) % m;
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(jk) / static_cast<double>(m);
      F(j, k) = std::polar(scale, angle);
    }
  }
  return F;
}

CMatrix hadamard_matrix(long m) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Ones(1, 1);
  while (H.rows() < m) {
    const auto n = H.rows();
    Eigen::MatrixXd next(2 * n, 2 * n);
    next << H, H, H, -H;
    H = std::move(next);
  }
  return (H / std::sqrt(static_cast<double>(m))).cast<cplx>();
}

CMatrix haar_matrix(long m, Rng& rng) {
  CMatrix Z(m, m);
  for (long j = 0; j < m; ++j) Z.col(j) = complex_gaussian_vector(rng, m);
  Eigen::HouseholderQR<CMatrix> qr(Z);
  CMatrix Q = qr.householderQ();
  const CMatrix& R = qr.matrixQR();
  for (long j = 0; j < m; ++j) {
    const cplx d = R(j, j);
    const double mag = std::abs(d);
    if (mag > 0.0) Q.col(j) *= d / mag;
  }
  return Q;
}

CMatrix gaussian_matrix(long m, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd S(m, m);
  for (long j = 0; j < m; ++j) {
    for (long i = 0; i < m; ++i) S(i, j) = n01(rng);
    S.col(j).normalize();
  }
  return S.cast<cplx>();
}

}  // namespace

CMatrix make_spreading(Spreading kind, long m, Rng& rng) {
  validate_spreading(kind, m);
  switch (kind) {
    case Spreading::DFT: return dft_matrix(m);
    case Spreading::Hadamard: return hadamard_matrix(m);
    case Spreading::Haar: return haar_matrix(m, rng);
    case Spreading::Gaussian: return gaussian_matrix(m, rng);
  }
  throw ConfigError("invalid spreading kind");
}

SystemInstance transmit(const CVector& h, const CMatrix& U, const CVector& x_true, double sigma2,
                        Rng& rng) {
  if (U.rows() != h.size() || U.cols() != x_true.size()) {
    throw ShapeError("transmit: H is " + std::to_string(h.size()) + ", U is " +
                     std::to_string(U.rows()) + "x" + std::to_string(U.cols()) + ", x is " +
                     std::to_string(x_true.size()));
  }
  if (!(sigma2 >= 0.0)) throw ConfigError("transmit: sigma2 must be non-negative");
  SystemInstance inst;
  inst.h = h;
  inst.U = U;
  inst.A = h.asDiagonal() * U;
  inst.x_true = x_true;
  inst.sigma2 = sigma2;
  inst.y = inst.A * x_true;
  if (sigma2 > 0.0) inst.y += complex_gaussian_vector(rng, h.size(), sigma2);
  return inst;
}

SystemInstance draw_instance(Spreading kind, long m, const Constellation& c, double sigma2,
                             Rng& rng, const CMatrix* fixed_spreading) {
  validate_spreading(kind, m);
  CVector h = kind == Spreading::Gaussian ? CVector::Ones(m) : make_channel(m, rng);
  CMatrix U = fixed_spreading != nullptr ? *fixed_spreading : make_spreading(kind, m, rng);
  if (U.rows() != m || U.cols() != m) throw ShapeError("draw_instance: spreading shape mismatch");

  std::uniform_int_distribution<int> pick(0, c.size() - 1);
  HardDecision symbols;
  symbols.symbols.resize(static_cast<std::size_t>(m));
  for (auto& s : symbols.symbols) s = pick(rng);

  SystemInstance inst = transmit(h, U, c.values(symbols), sigma2, rng);
  inst.symbols = std::move(symbols);
  inst.spreading = kind;
  inst.unitary_spreading = is_unitary(kind);
  inst.constellation = &c;
  return inst;
}

double snr_to_sigma2(double snr_db) noexcept { return std::pow(10.0, -snr_db / 10.0); }

}  // namespace sparse_dfe
