#include <cmath>

#include "common.hpp"

namespace hdprior {

namespace {

std::vector<Interpolant> grid_interpolants(const NPPSpec& spec, std::size_t H) {
  if (spec.grids.size() != H) {
    throw ShapeError("normalized power prior needs one log normalizing constant grid per "
                     "historical data set (got " + std::to_string(spec.grids.size()) + ", need " +
                     std::to_string(H) + ")");
  }
  if (!(spec.a0_shape1 > 0.0 && spec.a0_shape2 > 0.0)) {
    throw DomainError("beta prior shapes for a0 must be positive");
  }
  std::vector<Interpolant> out;
  for (const auto& g : spec.grids) {
    if (g.a0.size() < 2 || g.a0.front() != 0.0 || g.a0.back() != 1.0) {
      throw RangeError("log normalizing constant grid must cover a0 in [0, 1]");
    }
    if (g.lognc_smooth.front() != 0.0) {
      throw DomainError("log normalizing constant grid must be 0 at a0 = 0");
    }
    out.push_back(g.interpolant());
  }
  return out;
}

class NppTarget final : public LogTarget {
 public:
  NppTarget(ParameterSpace space, const GlmModel& model, std::vector<Dataset> data,
            std::vector<Interpolant> lognc, const NPPSpec& spec, bool include_current)
      : LogTarget(std::move(space)),
        model_(model),
        data_(std::move(data)),
        lognc_(std::move(lognc)),
        h_(spec.h.resolved(data_.front().cols())),
        shape1_(spec.a0_shape1),
        shape2_(spec.a0_shape2),
        include_current_(include_current),
        p_(data_.front().cols()),
        a0_off_(LogTarget::space().block("a0").offset) {}

  double log_density(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const override {
    if (grad) grad->setZero(dim());
    const auto beta = u.head(p_);
    const bool free = model_.samples_dispersion();
    const double tau = free ? u(p_) : detail::fixed_tau(model_);
    const Eigen::Index tau_off = free ? p_ : -1;
    double total = detail::normal_prior(beta, h_.mu0, h_.sigma0, grad, 0);
    if (free) {
      double d = 0.0;
      total += detail::dispersion_prior(tau, h_.alpha0, h_.gamma0, grad ? &d : nullptr);
      if (grad) (*grad)(p_) += d;
    }
    if (include_current_) total += detail::loglik(model_, data_[0], beta, tau, 1.0, grad, 0, tau_off);
    for (std::size_t k = 1; k < data_.size(); ++k) {
      const Eigen::Index i = a0_off_ + static_cast<Eigen::Index>(k) - 1;
      const double v = u(i);
      const double a0 = math::inv_logit(v);
      const double log_a0 = math::log_inv_logit(v);
      const double log1m_a0 = math::log_inv_logit(-v);
      // Beta(a0) density times the logit Jacobian a0 (1 - a0).
      total += math::beta_lpdf_logs(log_a0, log1m_a0, shape1_, shape2_) + log_a0 + log1m_a0;
      double slope = 0.0;
      total -= lognc_[k - 1].eval(a0, &slope);
      LikelihoodGradient g{Eigen::VectorXd::Zero(p_), 0.0};
      const double ll =
          accumulate_log_likelihood(model_, data_[k], beta, tau, 1.0, grad ? &g : nullptr);
      total += a0 * ll;
      if (grad) {
        grad->head(p_) += a0 * g.beta;
        if (free) (*grad)(p_) += a0 * g.tau;
        (*grad)(i) += (ll - slope) * a0 * (1.0 - a0) + shape1_ * (1.0 - a0) - shape2_ * a0;
      }
      if (!std::isfinite(total)) return math::kNegInf;
    }
    return std::isfinite(total) ? total : math::kNegInf;
  }

 private:
  GlmModel model_;
  std::vector<Dataset> data_;
  std::vector<Interpolant> lognc_;
  InitialPriorHyper h_;
  double shape1_;
  double shape2_;
  bool include_current_;
  Eigen::Index p_;
  Eigen::Index a0_off_;
};

}  // namespace

double npp_log_kernel(const GlmModel& model, const Eigen::VectorXd& beta, double tau,
                      const Eigen::VectorXd& a0, std::span<const Dataset> historical,
                      const NPPSpec& spec) {
  const auto lognc = grid_interpolants(spec, historical.size());
  if (a0.size() != static_cast<Eigen::Index>(historical.size())) {
    throw ShapeError("need one a0 per historical data set");
  }
  if (!model.samples_dispersion()) tau = detail::fixed_tau(model);
  double total = initial_prior_log_density(model, beta, std::exp(tau), spec.h);
  for (std::size_t k = 0; k < historical.size(); ++k) {
    const double a = a0(static_cast<Eigen::Index>(k));
    total += lognc[k](a) * -1.0;
    total += math::beta_lpdf_logs(std::log(a), std::log1p(-a), spec.a0_shape1, spec.a0_shape2);
    if (a > 0.0) total += a * log_likelihood(model, beta, std::exp(tau), historical[k]);
  }
  return total;
}

TargetPtr make_npp_target(const GlmModel& model, std::span<const Dataset> data, const NPPSpec& spec,
                          bool include_current) {
  detail::require_historical(data, "normalized power prior");
  for (const auto& d : data) validate_responses(model, d);
  const std::size_t H = data.size() - 1;
  auto lognc = grid_interpolants(spec, H);
  ParameterSpace space = glm_parameter_space(model, data[0].column_names);
  std::vector<std::string> a0_names;
  for (std::size_t h = 1; h <= H; ++h) a0_names.push_back("a0_hist_" + std::to_string(h));
  space.add("a0", Transform::logit, a0_names);
  return std::make_shared<NppTarget>(std::move(space), model,
                                     std::vector<Dataset>(data.begin(), data.end()),
                                     std::move(lognc), spec, include_current);
}

}  // namespace hdprior
