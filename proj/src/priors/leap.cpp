#include <cmath>

#include "common.hpp"

namespace hdprior {

namespace {

Eigen::VectorXd resolve_conc(const LEAPSpec& spec) {
  if (spec.K < 2) throw DomainError("latent exchangeability prior needs K >= 2 components");
  Eigen::VectorXd conc = detail::filled(spec.prob_conc, spec.K, 1.0, "concentration vector");
  detail::require_positive(conc, "concentration vector");
  return conc;
}

double dirichlet_log_norm(const Eigen::VectorXd& conc) {
  double v = std::lgamma(conc.sum());
  for (Eigen::Index k = 0; k < conc.size(); ++k) v -= std::lgamma(conc(k));
  return v;
}

// Coordinates: per component k: beta_k, [tau_k]; then K - 1 stick-breaking coordinates.
class LeapTarget final : public LogTarget {
 public:
  LeapTarget(ParameterSpace space, const GlmModel& model, Dataset current, Dataset hist,
             LEAPSpec spec, bool include_current)
      : LogTarget(std::move(space)),
        model_(model),
        current_(std::move(current)),
        hist_(std::move(hist)),
        K_(spec.K),
        conc_(resolve_conc(spec)),
        log_dir_norm_(dirichlet_log_norm(conc_)),
        h_(spec.h.resolved(current_.cols())),
        include_current_(include_current),
        p_(current_.cols()),
        free_(model_.samples_dispersion()),
        stride_(p_ + (free_ ? 1 : 0)),
        gamma_off_(stride_ * K_) {}

  double log_density(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const override {
    if (grad) grad->setZero(dim());
    const StickBreak sb = stick_break(u.segment(gamma_off_, K_ - 1));
    double total = log_dir_norm_ + sb.log_jacobian;
    Eigen::VectorXd g_log_gamma = conc_.array() - 1.0;
    for (int k = 0; k < K_; ++k) {
      if (conc_(k) != 1.0) total += (conc_(k) - 1.0) * sb.log_x(k);
    }

    std::vector<double> taus(K_, detail::fixed_tau(model_));
    std::vector<DispersionTerms> disp(K_);
    Eigen::MatrixXd eta(hist_.rows(), K_);
    for (int k = 0; k < K_; ++k) {
      const Eigen::Index off = stride_ * k;
      const auto beta = u.segment(off, p_);
      total += detail::normal_prior(beta, h_.mu0, h_.sigma0, grad, off);
      if (free_) {
        taus[k] = u(off + p_);
        double d = 0.0;
        total += detail::dispersion_prior(taus[k], h_.alpha0, h_.gamma0, grad ? &d : nullptr);
        if (grad) (*grad)(off + p_) += d;
      }
      disp[k] = DispersionTerms::make(model_, taus[k]);
      eta.col(k) = hist_.X * beta + hist_.offset;
    }
    if (include_current_) {
      total += detail::loglik(model_, current_, u.head(p_), taus[0], 1.0, grad, 0, free_ ? p_ : -1);
      if (!std::isfinite(total)) return math::kNegInf;
    }

    Eigen::MatrixXd d_eta;
    Eigen::VectorXd d_tau;
    if (grad) {
      d_eta = Eigen::MatrixXd::Zero(hist_.rows(), K_);
      d_tau = Eigen::VectorXd::Zero(K_);
    }
    std::vector<ObservationTerms> terms(K_);
    std::vector<double> lp(K_);
    for (Eigen::Index i = 0; i < hist_.rows(); ++i) {
      double mx = math::kNegInf;
      for (int k = 0; k < K_; ++k) {
        if (!observation_terms(model_, hist_.y(i), eta(i, k), disp[k], terms[k])) {
          return math::kNegInf;
        }
        lp[k] = sb.log_x(k) + terms[k].loglik;
        mx = std::max(mx, lp[k]);
      }
      if (!std::isfinite(mx)) return math::kNegInf;
      double s = 0.0;
      for (int k = 0; k < K_; ++k) s += std::exp(lp[k] - mx);
      const double lse = mx + std::log(s);
      total += lse;
      if (grad) {
        for (int k = 0; k < K_; ++k) {
          const double r = std::exp(lp[k] - lse);
          d_eta(i, k) = r * terms[k].d_eta;
          d_tau(k) += r * terms[k].d_tau;
          g_log_gamma(k) += r;
        }
      }
    }
    if (grad) {
      for (int k = 0; k < K_; ++k) {
        const Eigen::Index off = stride_ * k;
        grad->segment(off, p_) += hist_.X.transpose() * d_eta.col(k);
        if (free_) (*grad)(off + p_) += d_tau(k);
      }
      stick_break_pullback(sb, g_log_gamma, grad->segment(gamma_off_, K_ - 1));
    }
    return std::isfinite(total) ? total : math::kNegInf;
  }

 private:
  GlmModel model_;
  Dataset current_;
  Dataset hist_;
  int K_;
  Eigen::VectorXd conc_;
  double log_dir_norm_;
  InitialPriorHyper h_;
  bool include_current_;
  Eigen::Index p_;
  bool free_;
  Eigen::Index stride_;
  Eigen::Index gamma_off_;
};

Dataset stacked_history(std::span<const Dataset> data) {
  return stack_datasets(data.subspan(1));
}

}  // namespace

double leap_log_density(const GlmModel& model, const std::vector<Eigen::VectorXd>& betas,
                        const std::vector<double>& phis, const Eigen::VectorXd& gamma,
                        std::span<const Dataset> data, const LEAPSpec& spec, bool include_current) {
  detail::require_historical(data, "latent exchangeability prior");
  const Eigen::VectorXd conc = resolve_conc(spec);
  const std::size_t K = static_cast<std::size_t>(spec.K);
  const bool free = model.samples_dispersion();
  if (betas.size() != K || gamma.size() != spec.K || (free && phis.size() != K)) {
    throw ShapeError("latent exchangeability prior parameters have the wrong dimensions");
  }
  const InitialPriorHyper h = spec.h.resolved(data[0].cols());
  const Dataset hist = stacked_history(data);
  double total = dirichlet_log_norm(conc);
  for (std::size_t k = 0; k < K; ++k) {
    const double phi = free ? phis[k] : model.fixed_dispersion();
    total += (conc(static_cast<Eigen::Index>(k)) - 1.0) * std::log(gamma(static_cast<Eigen::Index>(k)));
    total += initial_prior_log_density(model, betas[k], phi, h);
  }
  const double phi1 = free ? phis[0] : model.fixed_dispersion();
  if (include_current) total += log_likelihood(model, betas[0], phi1, data[0]);
  for (Eigen::Index i = 0; i < hist.rows(); ++i) {
    Dataset row = make_dataset(hist.y.segment(i, 1), hist.X.middleRows(i, 1),
                               hist.offset.segment(i, 1), hist.column_names);
    std::vector<double> terms;
    for (std::size_t k = 0; k < K; ++k) {
      const double phi = free ? phis[k] : model.fixed_dispersion();
      terms.push_back(std::log(gamma(static_cast<Eigen::Index>(k))) +
                      log_likelihood(model, betas[k], phi, row));
    }
    total += math::log_sum_exp(terms);
  }
  return total;
}

TargetPtr make_leap_target(const GlmModel& model, std::span<const Dataset> data,
                           const LEAPSpec& spec, bool include_current) {
  detail::require_historical(data, "latent exchangeability prior");
  resolve_conc(spec);
  for (const auto& d : data) validate_responses(model, d);
  const auto& names = data[0].column_names;
  ParameterSpace space = glm_parameter_space(model, names);
  for (int k = 2; k <= spec.K; ++k) {
    const std::string tag = "_comp_" + std::to_string(k);
    space.add("beta" + tag, Transform::identity, detail::suffixed(names, tag));
    if (model.samples_dispersion()) space.add("dispersion" + tag, Transform::log, {"dispersion" + tag});
  }
  std::vector<std::string> gamma_names;
  for (int k = 1; k <= spec.K; ++k) gamma_names.push_back("gamma_" + std::to_string(k));
  space.add("gamma", Transform::simplex, gamma_names);
  return std::make_shared<LeapTarget>(std::move(space), model, data[0], stacked_history(data), spec,
                                      include_current);
}

}  // namespace hdprior
