#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace airguard::stats {

struct TestResult {
  double statistic = 0.0;  // W or T
  double p_value = 1.0;
  std::optional<double> df;
};

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> sd;  // sample sd, absent for n == 1
};

/// Mean and (n - 1)-denominator standard deviation. Throws EmptySample.
Summary summarize(std::span<const double> x);

/// Shapiro-Wilk W with Royston's (1995) coefficient and p-value
/// approximations, valid for 3 <= n <= 5000.
/// Throws SampleTooSmall (n < 3), InvalidArgument (n > 5000 or non-finite),
/// ConstantSample (zero range).
TestResult shapiro_wilk(std::span<const double> x);

/// Paired-samples t-test of a - b; two-sided p, df = n - 1.
/// Throws LengthMismatch, SampleTooSmall (n < 2), ZeroVarianceDifferences.
TestResult paired_t(std::span<const double> a, std::span<const double> b);

double normal_cdf(double z);
/// Inverse standard normal CDF (Wichura AS 241, ~1e-16 relative accuracy).
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T_df| >= |t|).
double student_t_two_sided_p(double t, double df);

/// Shapiro-Wilk coefficients a_1..a_{n/2} (largest first) for sample size n.
std::vector<double> shapiro_wilk_coefficients(std::size_t n);

}  // namespace airguard::stats
