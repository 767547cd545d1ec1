#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hdprior {

/// Local polynomial regression with tricube weights over the q = ceil(span * n)
/// nearest neighbours, evaluated at each x. Falls back to a local constant when a
/// local design is singular.
Eigen::VectorXd loess_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double span,
                          int degree);

/// Piecewise-linear interpolant on strictly ascending knots.
class Interpolant {
 public:
  Interpolant(std::vector<double> x, std::vector<double> y);

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }

  /// Value at q; throws RangeError outside [x_min, x_max].
  double operator()(double q) const;
  /// Value and slope. At an interior knot the slope of the left segment is used.
  double eval(double q, double* slope) const;

 private:
  std::vector<double> x_;
  std::vector<double> y_;
};

double interp_linear(const Interpolant& itp, double q);

}  // namespace hdprior
