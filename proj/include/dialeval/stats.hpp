#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace dialeval {

// Undefined feature values travel through the statistics as quiet NaN.

struct PearsonResult {
  double r;
  double p;  // two-sided, Student t with n - 2 degrees of freedom
  std::size_t n;
};

PearsonResult pearson(std::span<const double> x, std::span<const double> y);

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p-value of a Student t statistic.
double student_t_two_sided_p(double t, double degrees_of_freedom);

struct SignTestResult {
  std::size_t n_positive = 0;  // a_i > b_i
  std::size_t n_negative = 0;  // a_i < b_i
  std::size_t n_ties = 0;
  std::size_t n_dropped = 0;  // pairs with an undefined side
  double p_value = 1.0;
};

// Exact two-sided binomial p for a sign test with the given sign counts.
double sign_test_p_value(std::size_t n_positive, std::size_t n_negative);

// Paired by position. Pairs with a NaN on either side are dropped, ties are
// counted but excluded from the test. Throws DegenerateError if nothing is left.
SignTestResult paired_sign_test(std::span<const double> a, std::span<const double> b);

enum class ThresholdRounding {
  None,
  // Truncate to two significant digits: 0.05 / 60 -> 8.3e-4.
  DownTwoSignificant,
};

double bonferroni_threshold(double alpha, std::size_t tests, ThresholdRounding rounding);

struct DistributionSummary {
  std::size_t count;
  double mean, min, q1, median, q3, max;
};

// Quartiles by linear interpolation between order statistics at position
// p * (n - 1). NaN values are dropped when `drop_undefined`, otherwise they
// raise ArgumentError.
DistributionSummary summarize(std::span<const double> values, bool drop_undefined = true);

}  // namespace dialeval
