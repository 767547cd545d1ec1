#include "hdprior/target.hpp"

namespace hdprior {

namespace {

ParameterSpace plain_space(int dim) {
  std::vector<std::string> names;
  for (int i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i + 1));
  ParameterSpace s;
  s.add("x", Transform::identity, std::move(names));
  return s;
}

}  // namespace

FunctionTarget::FunctionTarget(int dim, Fn fn) : LogTarget(plain_space(dim)), fn_(std::move(fn)) {}

FunctionTarget::FunctionTarget(ParameterSpace space, Fn fn)
    : LogTarget(std::move(space)), fn_(std::move(fn)) {}

double FunctionTarget::log_density(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const {
  if (grad) grad->setZero(dim());
  return fn_(u, grad);
}

Eigen::VectorXd finite_difference_gradient(const LogTarget& target, const Eigen::VectorXd& u,
                                           double h) {
  Eigen::VectorXd g(u.size());
  Eigen::VectorXd v = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    v(i) = u(i) + h;
    const double up = target.log_density(v, nullptr);
    v(i) = u(i) - h;
    const double down = target.log_density(v, nullptr);
    v(i) = u(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace hdprior
