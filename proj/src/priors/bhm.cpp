#include <cmath>

#include "common.hpp"

namespace hdprior {

BhmHyper BhmHyper::resolved(Eigen::Index p, Eigen::Index H) const {
  BhmHyper r = *this;
  r.meta_mean_mean = detail::filled(meta_mean_mean, p, 0.0, "meta mean prior mean");
  r.meta_mean_sd = detail::filled(meta_mean_sd, p, 10.0, "meta mean prior sd");
  r.meta_sd_mean = detail::filled(meta_sd_mean, p, 0.0, "meta sd prior location");
  r.meta_sd_sd = detail::filled(meta_sd_sd, p, 1.0, "meta sd prior scale");
  r.disp_hist_mean = detail::filled(disp_hist_mean, H, 0.0, "historical dispersion prior location");
  r.disp_hist_sd = detail::filled(disp_hist_sd, H, 10.0, "historical dispersion prior scale");
  detail::require_positive(r.meta_mean_sd, "meta mean prior sd");
  detail::require_positive(r.meta_sd_sd, "meta sd prior scale");
  if (H > 0) detail::require_positive(r.disp_hist_sd, "historical dispersion prior scale");
  if (!(disp_sd > 0.0)) throw DomainError("dispersion prior scale must be positive");
  return r;
}

double bhm_log_density(const GlmModel& model, const BhmPoint& x, std::span<const Dataset> data,
                       const BhmHyper& hyper, bool include_current) {
  detail::require_historical(data, "hierarchical model");
  const Eigen::Index p = data[0].cols();
  const std::size_t H = data.size() - 1;
  if (x.beta_hist.size() != H || x.beta.size() != p || x.mu.size() != p || x.sigma.size() != p) {
    throw ShapeError("hierarchical model parameters have the wrong dimensions");
  }
  const BhmHyper h = hyper.resolved(p, static_cast<Eigen::Index>(H));
  const bool free = model.samples_dispersion();
  if (free && x.phi_hist.size() != H) throw ShapeError("need one historical dispersion per set");
  double total = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(x.sigma(j) > 0.0)) return math::kNegInf;
    total += math::normal_lpdf(x.mu(j), h.meta_mean_mean(j), h.meta_mean_sd(j));
    total += math::half_normal_lpdf(x.sigma(j), h.meta_sd_mean(j), h.meta_sd_sd(j));
    total += math::normal_lpdf(x.beta(j), x.mu(j), x.sigma(j));
    for (std::size_t k = 0; k < H; ++k) {
      total += math::normal_lpdf(x.beta_hist[k](j), x.mu(j), x.sigma(j));
    }
  }
  const double phi = free ? x.phi : model.fixed_dispersion();
  if (free) total += math::half_normal_lpdf(x.phi, h.disp_mean, h.disp_sd);
  if (include_current) total += log_likelihood(model, x.beta, phi, data[0]);
  for (std::size_t k = 0; k < H; ++k) {
    const double phi_h = free ? x.phi_hist[k] : model.fixed_dispersion();
    const auto kk = static_cast<Eigen::Index>(k);
    if (free) total += math::half_normal_lpdf(phi_h, h.disp_hist_mean(kk), h.disp_hist_sd(kk));
    total += log_likelihood(model, x.beta_hist[k], phi_h, data[k + 1]);
  }
  return total;
}

namespace {

// Coordinates: z, [tau], per historical set z_h, [tau_h], then mu, log sigma.
// beta = mu + sigma * z.
class BhmTarget final : public LogTarget {
 public:
  BhmTarget(ParameterSpace space, const GlmModel& model, std::vector<Dataset> data,
            BhmHyper h, bool include_current)
      : LogTarget(std::move(space)),
        model_(model),
        data_(std::move(data)),
        h_(std::move(h)),
        include_current_(include_current),
        p_(data_.front().cols()),
        stride_(p_ + (model_.samples_dispersion() ? 1 : 0)),
        mu_off_(stride_ * static_cast<Eigen::Index>(data_.size())),
        sigma_off_(mu_off_ + p_) {}

  double log_density(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const override {
    if (grad) grad->setZero(dim());
    const bool free = model_.samples_dispersion();
    const auto mu = u.segment(mu_off_, p_);
    const Eigen::VectorXd log_sigma = u.segment(sigma_off_, p_);
    const Eigen::VectorXd sigma = log_sigma.array().exp();
    double total = 0.0;
    for (Eigen::Index j = 0; j < p_; ++j) {
      total += math::normal_lpdf(mu(j), h_.meta_mean_mean(j), h_.meta_mean_sd(j));
      total += math::half_normal_lpdf(sigma(j), h_.meta_sd_mean(j), h_.meta_sd_sd(j)) + log_sigma(j);
      if (grad) {
        (*grad)(mu_off_ + j) += math::normal_lpdf_dx(mu(j), h_.meta_mean_mean(j), h_.meta_mean_sd(j));
        (*grad)(sigma_off_ + j) +=
            math::normal_lpdf_dx(sigma(j), h_.meta_sd_mean(j), h_.meta_sd_sd(j)) * sigma(j) + 1.0;
      }
    }
    Eigen::VectorXd beta(p_);
    LikelihoodGradient g{Eigen::VectorXd::Zero(p_), 0.0};
    for (std::size_t k = 0; k < data_.size(); ++k) {
      const Eigen::Index off = stride_ * static_cast<Eigen::Index>(k);
      const auto z = u.segment(off, p_);
      total += -0.5 * z.squaredNorm() - static_cast<double>(p_) * math::kLogSqrt2Pi;
      if (grad) grad->segment(off, p_) -= z;
      double tau = detail::fixed_tau(model_);
      if (free) {
        tau = u(off + p_);
        const double m = k == 0 ? h_.disp_mean : h_.disp_hist_mean(static_cast<Eigen::Index>(k) - 1);
        const double s = k == 0 ? h_.disp_sd : h_.disp_hist_sd(static_cast<Eigen::Index>(k) - 1);
        double d = 0.0;
        total += detail::dispersion_prior(tau, m, s, grad ? &d : nullptr);
        if (grad) (*grad)(off + p_) += d;
      }
      if (k == 0 && !include_current_) continue;
      beta = mu + sigma.cwiseProduct(z);
      if (grad) {
        g.beta.setZero();
        g.tau = 0.0;
      }
      total += accumulate_log_likelihood(model_, data_[k], beta, tau, 1.0, grad ? &g : nullptr);
      if (!std::isfinite(total)) return math::kNegInf;
      if (grad) {
        grad->segment(off, p_) += g.beta.cwiseProduct(sigma);
        grad->segment(mu_off_, p_) += g.beta;
        grad->segment(sigma_off_, p_) += g.beta.cwiseProduct(sigma).cwiseProduct(z);
        if (free) (*grad)(off + p_) += g.tau;
      }
    }
    return std::isfinite(total) ? total : math::kNegInf;
  }

  Eigen::VectorXd outputs(const Eigen::VectorXd& u) const override {
    Eigen::VectorXd x = space().constrain(u);
    const auto mu = u.segment(mu_off_, p_);
    const Eigen::VectorXd sigma = u.segment(sigma_off_, p_).array().exp();
    // Outputs share the coordinate layout up to the end of the data blocks.
    for (std::size_t k = 0; k < data_.size(); ++k) {
      const Eigen::Index off = stride_ * static_cast<Eigen::Index>(k);
      x.segment(off, p_) = mu + sigma.cwiseProduct(u.segment(off, p_));
    }
    return x;
  }

 private:
  GlmModel model_;
  std::vector<Dataset> data_;
  BhmHyper h_;
  bool include_current_;
  Eigen::Index p_;
  Eigen::Index stride_;
  Eigen::Index mu_off_;
  Eigen::Index sigma_off_;
};

}  // namespace

TargetPtr make_bhm_target(const GlmModel& model, std::span<const Dataset> data, const BhmHyper& h,
                          bool include_current) {
  detail::require_historical(data, "hierarchical model");
  for (const auto& d : data) validate_responses(model, d);
  const Eigen::Index p = data[0].cols();
  const auto H = static_cast<Eigen::Index>(data.size()) - 1;
  const auto& names = data[0].column_names;
  ParameterSpace space = glm_parameter_space(model, names);
  for (Eigen::Index k = 1; k <= H; ++k) {
    const std::string tag = "_hist_" + std::to_string(k);
    space.add("beta" + tag, Transform::identity, detail::suffixed(names, tag));
    if (model.samples_dispersion()) space.add("dispersion" + tag, Transform::log, {"dispersion" + tag});
  }
  space.add("mean", Transform::identity, detail::prefixed("mean_", names));
  space.add("sd", Transform::log, detail::prefixed("sd_", names));
  return std::make_shared<BhmTarget>(std::move(space), model,
                                     std::vector<Dataset>(data.begin(), data.end()),
                                     h.resolved(p, H), include_current);
}

}  // namespace hdprior
