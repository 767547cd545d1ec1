#include <algorithm>
#include <cmath>

#include "hdprior/errors.hpp"
#include "hdprior/evidence.hpp"

namespace hdprior {

std::pair<double, double> solve_beta_hyper(double mean, double cv) {
  if (!(mean > 0.0 && mean < 1.0)) throw DomainError("beta prior mean must lie in (0, 1)");
  if (!(cv > 0.0) || !std::isfinite(cv)) throw DomainError("coefficient of variation must be positive");
  // var = m (1 - m) / (a + b + 1) = (cv m)^2
  const double total = (1.0 - mean) / (mean * cv * cv) - 1.0;
  const double a = mean * total;
  const double b = (1.0 - mean) * total;
  if (!(a > 0.0 && b > 0.0)) {
    throw DomainError("no beta distribution has mean " + std::to_string(mean) +
                      " and coefficient of variation " + std::to_string(cv));
  }
  return {a, b};
}

double a0_half_ratio(Eigen::Index n, Eigen::Index n0) {
  if (n < 1 || n0 < 1) throw DomainError("sample sizes must be positive");
  return std::min(1.0, 0.5 * static_cast<double>(n) / static_cast<double>(n0));
}

}  // namespace hdprior
