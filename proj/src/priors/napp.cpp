#include <cmath>

#include "common.hpp"

namespace hdprior {

NappComponent napp_component(const GlmModel& model, const Dataset& historical) {
  const MleFit fit = fit_mle(model, historical);
  NappComponent c;
  c.theta_hat = fit.theta_hat(model);
  c.info = fit.info;
  c.info_llt.compute(c.info);
  if (c.info_llt.info() != Eigen::Success) {
    throw SingularityError("Fisher information of a historical data set is not positive definite");
  }
  c.log_det_info = 2.0 * c.info_llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  if (!std::isfinite(c.log_det_info)) {
    throw SingularityError("Fisher information of a historical data set is singular");
  }
  return c;
}

namespace {

// log N(theta | theta_hat, (a0 I)^-1) with optional gradients in theta and a0.
double napp_term(const Eigen::Ref<const Eigen::VectorXd>& theta, double a0, const NappComponent& c,
                 Eigen::VectorXd* d_theta, double* d_a0) {
  const Eigen::VectorXd diff = theta - c.theta_hat;
  const Eigen::VectorXd idiff = c.info * diff;
  const double quad = diff.dot(idiff);
  const double d = static_cast<double>(theta.size());
  if (d_theta) *d_theta -= a0 * idiff;
  if (d_a0) *d_a0 = 0.5 * d / a0 - 0.5 * quad;
  return -d * math::kLogSqrt2Pi + 0.5 * d * std::log(a0) + 0.5 * c.log_det_info - 0.5 * a0 * quad;
}

class NappTarget final : public LogTarget {
 public:
  NappTarget(ParameterSpace space, const GlmModel& model, Dataset current,
             std::vector<NappComponent> comps, const NAPPSpec& spec, bool include_current)
      : LogTarget(std::move(space)),
        model_(model),
        current_(std::move(current)),
        comps_(std::move(comps)),
        spec_(spec),
        include_current_(include_current),
        p_(current_.cols()) {
    if (!spec_.fixed_a0) a0_off_ = LogTarget::space().block("a0").offset;
  }

  double log_density(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const override {
    if (grad) grad->setZero(dim());
    const bool free = model_.samples_dispersion();
    const Eigen::Index d = free ? p_ + 1 : p_;
    const auto theta = u.head(d);
    const double tau = free ? u(p_) : detail::fixed_tau(model_);
    double total = 0.0;
    if (include_current_) {
      total += detail::loglik(model_, current_, u.head(p_), tau, 1.0, grad, 0, free ? p_ : -1);
      if (!std::isfinite(total)) return math::kNegInf;
    }
    Eigen::VectorXd d_theta;
    if (grad) d_theta = Eigen::VectorXd::Zero(d);
    for (std::size_t h = 0; h < comps_.size(); ++h) {
      const auto hh = static_cast<Eigen::Index>(h);
      if (spec_.fixed_a0) {
        total += napp_term(theta, (*spec_.fixed_a0)(hh), comps_[h], grad ? &d_theta : nullptr,
                           nullptr);
        continue;
      }
      const Eigen::Index i = a0_off_ + hh;
      const double v = u(i);
      const double a0 = math::inv_logit(v);
      const double log_a0 = math::log_inv_logit(v);
      const double log1m_a0 = math::log_inv_logit(-v);
      double d_a0 = 0.0;
      total += napp_term(theta, a0, comps_[h], grad ? &d_theta : nullptr, &d_a0);
      total += math::beta_lpdf_logs(log_a0, log1m_a0, spec_.a0_shape1, spec_.a0_shape2) + log_a0 +
               log1m_a0;
      if (grad) {
        (*grad)(i) += d_a0 * a0 * (1.0 - a0) + spec_.a0_shape1 * (1.0 - a0) -
                      spec_.a0_shape2 * a0;
      }
    }
    if (grad) grad->head(d) += d_theta;
    return std::isfinite(total) ? total : math::kNegInf;
  }

 private:
  GlmModel model_;
  Dataset current_;
  std::vector<NappComponent> comps_;
  NAPPSpec spec_;
  bool include_current_;
  Eigen::Index p_;
  Eigen::Index a0_off_ = 0;
};

}  // namespace

double napp_log_density(const Eigen::VectorXd& theta, const Eigen::VectorXd& a0,
                        std::span<const NappComponent> comps, double shape1, double shape2) {
  if (a0.size() != static_cast<Eigen::Index>(comps.size())) {
    throw ShapeError("need one a0 per historical data set");
  }
  double total = 0.0;
  for (std::size_t h = 0; h < comps.size(); ++h) {
    const double a = a0(static_cast<Eigen::Index>(h));
    if (theta.size() != comps[h].theta_hat.size()) throw ShapeError("theta has the wrong length");
    total += napp_term(theta, a, comps[h], nullptr, nullptr);
    if (shape1 > 0.0 && shape2 > 0.0) {
      total += math::beta_lpdf_logs(std::log(a), std::log1p(-a), shape1, shape2);
    }
  }
  return total;
}

TargetPtr make_napp_target(const GlmModel& model, std::span<const Dataset> data,
                           const NAPPSpec& spec, bool include_current) {
  detail::require_historical(data, "normalized asymptotic power prior");
  validate_responses(model, data[0]);
  const auto H = static_cast<Eigen::Index>(data.size()) - 1;
  if (spec.fixed_a0) {
    if (spec.fixed_a0->size() != H) throw ShapeError("need one fixed a0 per historical data set");
    if (!((spec.fixed_a0->array() > 0.0).all() && (spec.fixed_a0->array() <= 1.0).all())) {
      throw DomainError("fixed a0 must lie in (0, 1]");
    }
  } else if (!(spec.a0_shape1 > 0.0 && spec.a0_shape2 > 0.0)) {
    throw DomainError("beta prior shapes for a0 must be positive");
  }
  std::vector<NappComponent> comps;
  for (Eigen::Index h = 1; h <= H; ++h) comps.push_back(napp_component(model, data[h]));
  ParameterSpace space = glm_parameter_space(model, data[0].column_names);
  if (!spec.fixed_a0) {
    std::vector<std::string> names;
    for (Eigen::Index h = 1; h <= H; ++h) names.push_back("a0_hist_" + std::to_string(h));
    space.add("a0", Transform::logit, names);
  }
  return std::make_shared<NappTarget>(std::move(space), model, data[0], std::move(comps), spec,
                                      include_current);
}

}  // namespace hdprior
