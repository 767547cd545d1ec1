#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace hdprior::math {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

/// log(1 + exp(x)) without overflow.
inline double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double inv_logit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(inv_logit(x))
inline double log_inv_logit(double x) { return -log1p_exp(-x); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a > b) return a + std::log1p(std::exp(b - a));
  return b + std::log1p(std::exp(a - b));
}

double log_sum_exp(std::span<const double> values);

/// Log density of N(mean, sd^2) at x.
inline double normal_lpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * z * z;
}

/// d/dx of normal_lpdf.
inline double normal_lpdf_dx(double x, double mean, double sd) {
  return -(x - mean) / (sd * sd);
}

/// log of the standard normal CDF, accurate far into the lower tail.
double std_normal_lcdf(double x);

/// Normal(mean, sd^2) truncated below at zero, normalized on (0, inf).
inline double half_normal_lpdf(double x, double mean, double sd) {
  return normal_lpdf(x, mean, sd) - std_normal_lcdf(mean / sd);
}

/// Beta(a, b) log density given log(x) and log(1 - x).
double beta_lpdf_logs(double log_x, double log1m_x, double a, double b);

double std_normal_quantile(double p);

}  // namespace hdprior::math
