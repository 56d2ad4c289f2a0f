#include <doctest.h>

#include <cmath>

#include "sparse_dfe/equalizers.hpp"
#include "sparse_dfe/system_model.hpp"

using namespace sparse_dfe;

namespace {

const EqualizerKind kKinds[] = {EqualizerKind::ZF, EqualizerKind::MMSE,
                                EqualizerKind::ConvexRelaxation};

}  // namespace

TEST_SUITE("equalizers") {

TEST_CASE("zero forcing on the identity returns y") {
  Rng rng = make_stream(40, {0});
  const CVector y = complex_gaussian_vector(rng, 6);
  const SoftEstimate s = equalize(EqualizerKind::ZF, CMatrix::Identity(6, 6), y, 0.3,
                                  Constellation::get(Modulation::QPSK), SolverConfig{});
  CHECK((s.values - y).norm() < 1e-14);
  CHECK(s.kind == EqualizerKind::ZF);
}

TEST_CASE("MMSE on a unitary system is the shrunk matched filter") {
  Rng rng = make_stream(41, {0});
  const CMatrix U = make_spreading(Spreading::Haar, 16, rng);
  const CVector y = complex_gaussian_vector(rng, 16);
  const Constellation& c = Constellation::get(Modulation::QPSK);
  const SoftEstimate mmse = equalize(EqualizerKind::MMSE, U, y, 0.5, c, SolverConfig{});
  const SoftEstimate zf = equalize(EqualizerKind::ZF, U, y, 0.5, c, SolverConfig{});
  CHECK((mmse.values - U.adjoint() * y / 1.5).norm() < 1e-12);
  CHECK(mmse.values.norm() < zf.values.norm());
}

TEST_CASE("MMSE never has a larger norm than ZF") {
  Rng rng = make_stream(42, {0});
  const Constellation& c = Constellation::get(Modulation::QPSK);
  for (int t = 0; t < 20; ++t) {
    const SystemInstance inst = draw_instance(Spreading::Gaussian, 12, c, 0.2, rng);
    const SoftEstimate zf = equalize(EqualizerKind::ZF, inst.A, inst.y, inst.sigma2, c, SolverConfig{});
    const SoftEstimate mmse = equalize(EqualizerKind::MMSE, inst.A, inst.y, inst.sigma2, c, SolverConfig{});
    CHECK(mmse.values.norm() <= zf.values.norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("noiseless instances are recovered by every equalizer") {
  Rng rng = make_stream(43, {0});
  for (Modulation mod : {Modulation::BPSK, Modulation::QPSK, Modulation::QAM16}) {
    const Constellation& c = Constellation::get(mod);
    for (int t = 0; t < 5; ++t) {
      const SystemInstance inst = draw_instance(Spreading::Haar, 16, c, 0.0, rng);
      for (EqualizerKind k : kKinds) {
        CHECK(equalize_and_detect(k, inst.A, inst.y, 0.0, c, SolverConfig{}) == inst.symbols);
      }
    }
  }
}

TEST_CASE("convex output stays inside the box") {
  Rng rng = make_stream(44, {0});
  for (Modulation mod : {Modulation::QPSK, Modulation::QAM16}) {
    const Constellation& c = Constellation::get(mod);
    const SystemInstance inst = draw_instance(Spreading::DFT, 32, c, 1.0, rng);
    const SoftEstimate s = equalize(EqualizerKind::ConvexRelaxation, inst.A, inst.y, inst.sigma2, c, SolverConfig{});
    for (Eigen::Index i = 0; i < s.values.size(); ++i) {
      CHECK(std::abs(s.values[i].real()) <= c.box_bound());
      CHECK(std::abs(s.values[i].imag()) <= c.box_bound());
    }
  }
}

TEST_CASE("shrinkage limit") {
  const Constellation& c = Constellation::get(Modulation::QPSK);
  Rng rng = make_stream(45, {0});
  const CMatrix U = make_spreading(Spreading::DFT, 8, rng);
  const HardDecision d = equalize_and_detect(EqualizerKind::MMSE, U, CVector::Zero(8), 1e6, c, SolverConfig{});
  CHECK(d == HardDecision{std::vector<int>(8, 0)});
  const CVector y = complex_gaussian_vector(rng, 8);
  const SoftEstimate s = equalize(EqualizerKind::MMSE, U, y, 1e12, c, SolverConfig{});
  CHECK(s.values.norm() < 1e-11);
}

TEST_CASE("diagonal closed form matches the dense solve") {
  Rng rng = make_stream(46, {0});
  const Constellation& c = Constellation::get(Modulation::QPSK);
  for (Spreading sp : {Spreading::DFT, Spreading::Hadamard, Spreading::Haar}) {
    const SystemInstance inst = draw_instance(sp, 32, c, 0.2, rng);
    for (double s2 : {0.0, 0.2}) {
      const CVector dense = ridge_ls(inst.A, inst.y, s2);
      const CVector fast = linear_equalize_diagonal(inst.h, inst.U, inst.y, s2);
      CHECK((dense - fast).norm() < 1e-8 * dense.norm());
    }
  }
  CHECK_THROWS_AS(linear_equalize_diagonal(CVector::Zero(2), CMatrix::Identity(2, 2), CVector::Ones(2), 0.0),
                  SingularityError);
}

TEST_CASE("unitary noiseless: all equalizers agree") {
  Rng rng = make_stream(47, {0});
  const Constellation& c = Constellation::get(Modulation::QAM16);
  const SystemInstance inst = draw_instance(Spreading::DFT, 32, c, 0.0, rng);
  const HardDecision zf = equalize_and_detect(EqualizerKind::ZF, inst.A, inst.y, 0.0, c, SolverConfig{});
  for (EqualizerKind k : kKinds) {
    CHECK(equalize_and_detect(k, inst.A, inst.y, 0.0, c, SolverConfig{}) == zf);
  }
}

TEST_CASE("MMSE symbol error rate does not exceed ZF (Monte Carlo)") {
  const Constellation& c = Constellation::get(Modulation::QPSK);
  const int trials = 10000;
  const long m = 8;
  long zf_err = 0, mmse_err = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_stream(48, {static_cast<std::uint64_t>(t)});
    const SystemInstance inst = draw_instance(Spreading::DFT, m, c, snr_to_sigma2(6.0), rng);
    zf_err += count_symbol_errors(
        equalize_and_detect(EqualizerKind::ZF, inst.A, inst.y, inst.sigma2, c, SolverConfig{}), inst.symbols);
    mmse_err += count_symbol_errors(
        equalize_and_detect(EqualizerKind::MMSE, inst.A, inst.y, inst.sigma2, c, SolverConfig{}), inst.symbols);
  }
  const double n = static_cast<double>(trials * m);
  const double p_zf = zf_err / n, p_mmse = mmse_err / n;
  const double se = std::sqrt(p_zf * (1 - p_zf) / n + p_mmse * (1 - p_mmse) / n);
  CHECK(p_mmse <= p_zf + 3.0 * se);
}

TEST_CASE("equalizer tokens") {
  CHECK(parse_equalizer("convex") == EqualizerKind::ConvexRelaxation);
  CHECK(parse_equalizer("zf") == EqualizerKind::ZF);
  CHECK_THROWS_AS(parse_equalizer("dfe"), ConfigError);
}

}
