#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "hdprior/errors.hpp"
#include "hdprior/glm.hpp"
#include "hdprior/math.hpp"
#include "hdprior/priors.hpp"

namespace hdprior::detail {

inline void require_current(std::span<const Dataset> data) {
  if (data.empty()) throw ShapeError("no current data set supplied");
}

inline void require_historical(std::span<const Dataset> data, const char* prior) {
  require_current(data);
  if (data.size() < 2) {
    throw ShapeError(std::string(prior) + " needs at least one historical data set");
  }
  const Eigen::Index p = data[0].cols();
  for (const auto& d : data) {
    if (d.cols() != p) throw ShapeError("all data sets must share the same design columns");
  }
}

/// Half-normal prior on phi = exp(tau) plus the log Jacobian tau.
inline double dispersion_prior(double tau, double mean, double sd, double* d_tau) {
  const double phi = std::exp(tau);
  if (d_tau) *d_tau += math::normal_lpdf_dx(phi, mean, sd) * phi + 1.0;
  return math::half_normal_lpdf(phi, mean, sd) + tau;
}

/// Independent normals on beta; gradient added into grad at `offset`.
inline double normal_prior(const Eigen::Ref<const Eigen::VectorXd>& beta,
                           const Eigen::VectorXd& mean, const Eigen::VectorXd& sd,
                           Eigen::VectorXd* grad, Eigen::Index offset) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    total += math::normal_lpdf(beta(j), mean(j), sd(j));
    if (grad) (*grad)(offset + j) += math::normal_lpdf_dx(beta(j), mean(j), sd(j));
  }
  return total;
}

inline Eigen::VectorXd filled(const Eigen::VectorXd& v, Eigen::Index n, double value,
                              const char* what) {
  if (v.size() == 0) return Eigen::VectorXd::Constant(n, value);
  if (v.size() != n) {
    throw ShapeError(std::string(what) + " has length " + std::to_string(v.size()) +
                     ", expected " + std::to_string(n));
  }
  return v;
}

inline void require_positive(const Eigen::VectorXd& v, const char* what) {
  if (!(v.array() > 0.0).all() || !v.allFinite()) {
    throw DomainError(std::string(what) + " must be positive");
  }
}

inline std::vector<std::string> suffixed(const std::vector<std::string>& names,
                                         const std::string& suffix) {
  std::vector<std::string> out;
  for (const auto& n : names) out.push_back(n + suffix);
  return out;
}

inline std::vector<std::string> prefixed(const std::string& prefix,
                                         const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) out.push_back(prefix + n);
  return out;
}

/// weight * log-likelihood of `data` at (beta, tau). The beta gradient is added at
/// beta_offset and the tau gradient at tau_offset (skipped when negative).
inline double loglik(const GlmModel& model, const Dataset& data,
                     const Eigen::Ref<const Eigen::VectorXd>& beta, double tau, double weight,
                     Eigen::VectorXd* grad, Eigen::Index beta_offset, Eigen::Index tau_offset) {
  if (!grad) return accumulate_log_likelihood(model, data, beta, tau, weight, nullptr);
  LikelihoodGradient g{Eigen::VectorXd::Zero(beta.size()), 0.0};
  const double v = accumulate_log_likelihood(model, data, beta, tau, weight, &g);
  grad->segment(beta_offset, beta.size()) += g.beta;
  if (tau_offset >= 0) (*grad)(tau_offset) += g.tau;
  return v;
}

/// tau for the current model when the dispersion is not sampled.
inline double fixed_tau(const GlmModel& model) {
  return model.samples_dispersion() ? 0.0 : std::log(model.fixed_dispersion());
}

}  // namespace hdprior::detail

namespace hdprior {

/// "beta" block named after the design columns, plus "dispersion" when sampled.
ParameterSpace glm_parameter_space(const GlmModel& model, const std::vector<std::string>& names);

}  // namespace hdprior
