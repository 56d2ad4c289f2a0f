#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sparse_dfe/statistics.hpp"

using namespace sparse_dfe;

TEST_SUITE("statistics") {

TEST_CASE("Wilson interval against closed forms") {
  const double z = 1.959963984540054;
  const auto [lo0, hi0] = stats::wilson_interval(0, 10);
  CHECK(lo0 == 0.0);
  CHECK(hi0 == doctest::Approx(z * z / (10.0 + z * z)).epsilon(1e-12));
  const auto [lo, hi] = stats::wilson_interval(5, 10);
  CHECK(lo == doctest::Approx(0.2366).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.7634).epsilon(1e-3));
  CHECK(lo + hi == doctest::Approx(1.0));
  const auto [lo1, hi1] = stats::wilson_interval(10, 10);
  CHECK(hi1 == 1.0);
  CHECK(lo1 == doctest::Approx(10.0 / (10.0 + z * z)).epsilon(1e-12));
}

TEST_CASE("Wilson interval contains the estimate and narrows with n") {
  double prev = 1.0;
  for (long n : {10L, 100L, 1000L, 10000L, 100000L}) {
    const long k = n / 7;
    const auto [lo, hi] = stats::wilson_interval(k, n);
    const double p = static_cast<double>(k) / static_cast<double>(n);
    CHECK(lo <= p);
    CHECK(p <= hi);
    CHECK(hi - lo < prev);
    prev = hi - lo;
  }
  CHECK(stats::wilson_interval(0, 0) == std::pair<double, double>{0.0, 1.0});
}

TEST_CASE("normal distribution helpers") {
  CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(stats::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  for (double p : {0.001, 0.1, 0.3, 0.5, 0.9, 0.999}) {
    CHECK(stats::normal_cdf(stats::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("Kolmogorov tail probabilities") {
  // With a very large n the small-sample correction is negligible and
  // lambda = sqrt(n) d.
  const long n = 100000000;
  const auto at = [&](double lambda) { return stats::ks_pvalue(lambda / 1e4, n); };
  CHECK(at(0.5) == doctest::Approx(0.9639).epsilon(1e-3));
  CHECK(at(1.0) == doctest::Approx(0.2700).epsilon(1e-3));
  CHECK(at(1.36) == doctest::Approx(0.0494).epsilon(5e-3));
  CHECK(at(1.63) == doctest::Approx(0.0098).epsilon(1e-2));
  // Both branches meet at the switch point.
  CHECK(at(1.1799999) == doctest::Approx(at(1.1800001)).epsilon(1e-6));
  CHECK(stats::ks_pvalue(0.0, 10) == 1.0);
  CHECK(stats::ks_pvalue(0.5, 0) == 1.0);
}

TEST_CASE("KS statistic") {
  const std::vector<double> one{0.0};
  CHECK(stats::ks_statistic_normal(one) == doctest::Approx(0.5));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> normal(5000), uniform(5000);
  for (auto& v : normal) v = g(rng);
  for (auto& v : uniform) v = u(rng);
  const double dn = stats::ks_statistic_normal(normal);
  const double du = stats::ks_statistic_normal(uniform);
  CHECK(stats::ks_pvalue(dn, 5000) > 0.01);
  CHECK(stats::ks_pvalue(du, 5000) < 1e-6);
}

TEST_CASE("median") {
  CHECK(stats::median({}) == 0.0);
  CHECK(stats::median({3.0}) == 3.0);
  CHECK(stats::median({5.0, 1.0, 3.0}) == 3.0);
  CHECK(stats::median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

}  // TEST_SUITE
