#include <cmath>

#include "common.hpp"

namespace hdprior {

using detail::fixed_tau;

InitialPriorHyper InitialPriorHyper::resolved(Eigen::Index p) const {
  InitialPriorHyper r = *this;
  r.mu0 = detail::filled(mu0, p, 0.0, "initial prior mean");
  r.sigma0 = detail::filled(sigma0, p, 10.0, "initial prior sd");
  detail::require_positive(r.sigma0, "initial prior sd");
  if (!(gamma0 > 0.0)) throw DomainError("initial prior dispersion scale must be positive");
  return r;
}

double initial_prior_log_density(const GlmModel& model, const Eigen::VectorXd& beta, double phi,
                                 const InitialPriorHyper& hyper) {
  const InitialPriorHyper h = hyper.resolved(beta.size());
  double total = detail::normal_prior(beta, h.mu0, h.sigma0, nullptr, 0);
  if (model.samples_dispersion()) {
    if (!(phi > 0.0)) return math::kNegInf;
    total += math::half_normal_lpdf(phi, h.alpha0, h.gamma0);
  }
  return total;
}

double pp_log_kernel(const GlmModel& model, const Eigen::VectorXd& beta, double tau,
                     const Eigen::VectorXd& a0, std::span<const Dataset> historical,
                     const InitialPriorHyper& h) {
  if (a0.size() != static_cast<Eigen::Index>(historical.size())) {
    throw ShapeError("need one a0 per historical data set");
  }
  if (!((a0.array() >= 0.0).all() && (a0.array() <= 1.0).all())) {
    throw DomainError("a0 must lie in [0, 1]");
  }
  if (!model.samples_dispersion()) tau = fixed_tau(model);
  double total = initial_prior_log_density(model, beta, std::exp(tau), h);
  for (std::size_t k = 0; k < historical.size(); ++k) {
    if (a0(k) == 0.0) continue;
    total += a0(k) * log_likelihood(model, beta, std::exp(tau), historical[k]);
  }
  return total;
}

namespace {

class PowerTarget final : public LogTarget {
 public:
  PowerTarget(ParameterSpace space, const GlmModel& model, std::vector<Dataset> data,
              std::vector<double> weights, InitialPriorHyper h)
      : LogTarget(std::move(space)),
        model_(model),
        data_(std::move(data)),
        weights_(std::move(weights)),
        h_(std::move(h)),
        p_(data_.front().cols()) {}

  double log_density(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const override {
    if (grad) grad->setZero(dim());
    const auto beta = u.head(p_);
    const bool free = model_.samples_dispersion();
    const double tau = free ? u(p_) : fixed_tau(model_);
    const Eigen::Index tau_off = free ? p_ : -1;
    double total = detail::normal_prior(beta, h_.mu0, h_.sigma0, grad, 0);
    if (free) {
      double d = 0.0;
      total += detail::dispersion_prior(tau, h_.alpha0, h_.gamma0, grad ? &d : nullptr);
      if (grad) (*grad)(p_) += d;
    }
    for (std::size_t k = 0; k < data_.size(); ++k) {
      if (weights_[k] == 0.0) continue;
      total += detail::loglik(model_, data_[k], beta, tau, weights_[k], grad, 0, tau_off);
      if (!std::isfinite(total)) return math::kNegInf;
    }
    return total;
  }

 private:
  GlmModel model_;
  std::vector<Dataset> data_;
  std::vector<double> weights_;
  InitialPriorHyper h_;
  Eigen::Index p_;
};

}  // namespace


TargetPtr make_power_target(const GlmModel& model, std::span<const Dataset> data,
                            const Eigen::VectorXd& a0, const InitialPriorHyper& h,
                            bool include_current) {
  detail::require_current(data);
  const Eigen::Index H = static_cast<Eigen::Index>(data.size()) - 1;
  if (a0.size() != 0 && a0.size() != H) {
    throw ShapeError("need one a0 per historical data set (" + std::to_string(H) + ")");
  }
  std::vector<Dataset> sets;
  std::vector<double> weights;
  const Eigen::Index p = data[0].cols();
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (data[k].cols() != p) throw ShapeError("all data sets must share the same design columns");
    validate_responses(model, data[k]);
    double w = 1.0;
    if (k == 0) {
      w = include_current ? 1.0 : 0.0;
    } else {
      w = a0.size() == 0 ? 0.0 : a0(static_cast<Eigen::Index>(k) - 1);
      if (!(w >= 0.0 && w <= 1.0)) throw DomainError("a0 must lie in [0, 1]");
    }
    sets.push_back(data[k]);
    weights.push_back(w);
  }
  return std::make_shared<PowerTarget>(glm_parameter_space(model, data[0].column_names), model,
                                       std::move(sets), std::move(weights), h.resolved(p));
}

}  // namespace hdprior
