#include "hdprior/math.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>

namespace hdprior::math {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return kNegInf;
  const double m = *std::max_element(values.begin(), values.end());
  if (m == kNegInf) return kNegInf;
  if (m == kInf) return kInf;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double std_normal_lcdf(double x) {
  if (x > -30.0) {
    return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  }
  // Asymptotic series for the Mills ratio in the far lower tail.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -kLogSqrt2Pi - 0.5 * x2 - std::log(-x) + std::log(series);
}

double beta_lpdf_logs(double log_x, double log1m_x, double a, double b) {
  // Unit shapes drop their term so the endpoints stay finite.
  const double left = a == 1.0 ? 0.0 : (a - 1.0) * log_x;
  const double right = b == 1.0 ? 0.0 : (b - 1.0) * log1m_x;
  return left + right - (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

double std_normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

}  // namespace hdprior::math
