#pragma once

#include <span>
#include <utility>
#include <vector>

namespace sparse_dfe::stats {

// Wilson score interval for a binomial proportion at normal quantile z.
std::pair<double, double> wilson_interval(long successes, long trials,
                                          double z = 1.959963984540054);

double normal_cdf(double x);
double normal_quantile(double p);

// Two-sided one-sample KS statistic of `samples` against N(0, 1).
// Sorts a copy.
double ks_statistic_normal(std::span<const double> samples);

// Asymptotic P(D_n > d) from the Kolmogorov distribution with the
// small-sample correction lambda = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) d.
double ks_pvalue(double d, long n);

// Median of a copy; the mean of the two middle values for even sizes.
double median(std::vector<double> values);

}  // namespace sparse_dfe::stats
