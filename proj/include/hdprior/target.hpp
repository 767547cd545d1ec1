#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hdprior/transforms.hpp"

namespace hdprior {

/// Log density on an unconstrained space, transform Jacobians included.
class LogTarget {
 public:
  explicit LogTarget(ParameterSpace space) : space_(std::move(space)) {}
  virtual ~LogTarget() = default;

  int dim() const { return space_.dim(); }
  const ParameterSpace& space() const { return space_; }

  /// Returns -inf outside the support. When grad is non-null it is resized to dim()
  /// and filled.
  virtual double log_density(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const = 0;

  /// Names and values of the reported (constrained) quantities.
  virtual std::vector<std::string> output_names() const { return space_.output_names(); }
  virtual Eigen::VectorXd outputs(const Eigen::VectorXd& u) const { return space_.constrain(u); }

 private:
  ParameterSpace space_;
};

using TargetPtr = std::shared_ptr<const LogTarget>;

/// LogTarget from a callable; outputs are the raw coordinates unless a space is given.
class FunctionTarget final : public LogTarget {
 public:
  using Fn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

  FunctionTarget(int dim, Fn fn);
  FunctionTarget(ParameterSpace space, Fn fn);

  double log_density(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const override;

 private:
  Fn fn_;
};

/// Central finite-difference gradient, used to check analytic gradients.
Eigen::VectorXd finite_difference_gradient(const LogTarget& target, const Eigen::VectorXd& u,
                                           double h = 1e-5);

}  // namespace hdprior
