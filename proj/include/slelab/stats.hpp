#pragma once

// Two-sample Kolmogorov-Smirnov and chi-square goodness-of-fit tests with
// asymptotic p-values, plus the special functions they need.

#include <stdexcept>
#include <string>
#include <vector>

namespace slelab::stats {

struct EmptyInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TwoSampleReport {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0, n2 = 0;
  std::string observable_name;
};

struct GofReport {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_bins = 0;
  double dof = 0.0;
};

// Q(a, x): regularized upper incomplete gamma.
double gammq(double a, double x);
// Kolmogorov distribution tail Q_KS(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 l^2}.
double ks_tail(double lambda);
double normal_cdf(double z);

TwoSampleReport ks_two_sample(std::vector<double> a, std::vector<double> b,
                              const std::string& observable_name = "");
GofReport chi2_gof(const std::vector<double>& counts,
                   const std::vector<double>& expected);

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);

}  // namespace slelab::stats
