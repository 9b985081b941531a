#include "dialeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dialeval/error.hpp"

namespace dialeval {

namespace {

// Continued fraction for I_x(a, b), modified Lentz. Converges for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEpsilon = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) return h;
  }
  throw NumericalDomainError("incomplete beta continued fraction did not converge");
}

std::vector<double> defined_values(std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  std::copy_if(values.begin(), values.end(), std::back_inserter(out), [](double v) { return !std::isnan(v); });
  return out;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ArgumentError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ArgumentError("incomplete beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double degrees_of_freedom) {
  if (!(degrees_of_freedom > 0.0)) throw ArgumentError("t distribution needs positive degrees of freedom");
  if (std::isinf(t)) return 0.0;
  const double x = degrees_of_freedom / (degrees_of_freedom + t * t);
  return std::clamp(regularized_incomplete_beta(0.5 * degrees_of_freedom, 0.5, x), 0.0, 1.0);
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ArgumentError("pearson: length mismatch (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
  const std::size_t n = x.size();
  if (n < 3) throw ArgumentError("pearson needs at least 3 observations");
  Eigen::Map<const Eigen::ArrayXd> xs(x.data(), Eigen::Index(n));
  Eigen::Map<const Eigen::ArrayXd> ys(y.data(), Eigen::Index(n));
  if (!xs.isFinite().all() || !ys.isFinite().all()) throw ArgumentError("pearson: non-finite input");
  const Eigen::ArrayXd dx = xs - xs.mean();
  const Eigen::ArrayXd dy = ys - ys.mean();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (sxx == 0.0 || syy == 0.0) throw DegenerateError("pearson: constant input has zero variance");
  const double r = std::clamp((dx * dy).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = double(n - 2);
  if (std::fabs(r) == 1.0) return {r, 0.0, n};
  const double t = r * std::sqrt(df / (1.0 - r * r));
  return {r, student_t_two_sided_p(t, df), n};
}

double sign_test_p_value(std::size_t n_positive, std::size_t n_negative) {
  const std::size_t n = n_positive + n_negative;
  if (n == 0) throw DegenerateError("sign test has no untied pairs");
  const std::size_t k = std::min(n_positive, n_negative);
  // log P(X = i) for X ~ Binomial(n, 1/2), summed over i <= k in log space.
  std::vector<double> log_terms(k + 1);
  const double log_norm = std::lgamma(double(n) + 1.0) - double(n) * std::log(2.0);
  for (std::size_t i = 0; i <= k; ++i) {
    log_terms[i] = log_norm - std::lgamma(double(i) + 1.0) - std::lgamma(double(n - i) + 1.0);
  }
  const double peak = *std::max_element(log_terms.begin(), log_terms.end());
  double sum = 0.0;
  for (double lt : log_terms) sum += std::exp(lt - peak);
  return std::min(1.0, 2.0 * std::exp(peak) * sum);
}

SignTestResult paired_sign_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ArgumentError("sign test: length mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  SignTestResult result;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) ++result.n_dropped;
    else if (a[i] > b[i]) ++result.n_positive;
    else if (a[i] < b[i]) ++result.n_negative;
    else ++result.n_ties;
  }
  result.p_value = sign_test_p_value(result.n_positive, result.n_negative);
  return result;
}

double bonferroni_threshold(double alpha, std::size_t tests, ThresholdRounding rounding) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
  if (tests == 0) throw ArgumentError("Bonferroni correction needs at least one test");
  const double threshold = alpha / double(tests);
  if (rounding == ThresholdRounding::None) return threshold;
  // Two significant digits, truncated. Dividing an integer by an exact power
  // of ten gives the correctly rounded decimal (8.3e-4 == 83 / 1e5).
  const int exponent = int(std::floor(std::log10(threshold)));
  const int shift = 1 - exponent;
  const double scale = std::pow(10.0, double(std::abs(shift)));
  const double scaled = shift >= 0 ? threshold * scale : threshold / scale;
  const double digits = std::floor(scaled * (1.0 + 1e-12));
  return shift >= 0 ? digits / scale : digits * scale;
}

DistributionSummary summarize(std::span<const double> values, bool drop_undefined) {
  if (!drop_undefined && std::any_of(values.begin(), values.end(), [](double v) { return std::isnan(v); })) {
    throw ArgumentError("summarize: undefined values present");
  }
  auto v = defined_values(values);
  if (v.empty()) throw DegenerateError("summarize: no defined values");
  std::sort(v.begin(), v.end());
  auto quantile = [&v](double p) {
    const double h = p * double(v.size() - 1);
    const auto lo = std::size_t(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
  };
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  return {v.size(), mean, v.front(), quantile(0.25), quantile(0.5), quantile(0.75), v.back()};
}

}  // namespace dialeval
