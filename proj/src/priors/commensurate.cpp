#include <cmath>

#include "common.hpp"

namespace hdprior {

namespace {

struct CpResolved {
  Eigen::VectorXd beta0_mean;
  Eigen::VectorXd beta0_sd;
  Eigen::VectorXd disp_hist_mean;
  Eigen::VectorXd disp_hist_sd;
};

CpResolved resolve(const CPSpec& spec, Eigen::Index p, Eigen::Index H) {
  if (!(spec.p_spike >= 0.0 && spec.p_spike <= 1.0)) throw DomainError("p_spike must lie in [0, 1]");
  if (!(spec.spike_sd > 0.0 && spec.slab_sd > 0.0 && spec.disp_sd > 0.0)) {
    throw DomainError("commensurate prior scales must be positive");
  }
  CpResolved r;
  r.beta0_mean = detail::filled(spec.beta0_mean, p, 0.0, "historical coefficient prior mean");
  r.beta0_sd = detail::filled(spec.beta0_sd, p, 10.0, "historical coefficient prior sd");
  r.disp_hist_mean = detail::filled(spec.disp_hist_mean, H, 0.0, "historical dispersion location");
  r.disp_hist_sd = detail::filled(spec.disp_hist_sd, H, 10.0, "historical dispersion scale");
  detail::require_positive(r.beta0_sd, "historical coefficient prior sd");
  if (H > 0) detail::require_positive(r.disp_hist_sd, "historical dispersion scale");
  return r;
}

// Coordinates: beta, [tau], beta0, [tau_h ...], log comm.
class CpTarget final : public LogTarget {
 public:
  CpTarget(ParameterSpace space, const GlmModel& model, std::vector<Dataset> data, CPSpec spec,
           CpResolved r, bool include_current)
      : LogTarget(std::move(space)),
        model_(model),
        data_(std::move(data)),
        spec_(std::move(spec)),
        r_(std::move(r)),
        include_current_(include_current),
        p_(data_.front().cols()),
        free_(model_.samples_dispersion()),
        beta0_off_(p_ + (free_ ? 1 : 0)),
        tau_hist_off_(beta0_off_ + p_),
        comm_off_(tau_hist_off_ + (free_ ? static_cast<Eigen::Index>(data_.size()) - 1 : 0)) {}

  double log_density(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const override {
    if (grad) grad->setZero(dim());
    const auto beta = u.head(p_);
    const auto beta0 = u.segment(beta0_off_, p_);
    const double tau = free_ ? u(p_) : detail::fixed_tau(model_);
    double total = detail::normal_prior(beta0, r_.beta0_mean, r_.beta0_sd, grad, beta0_off_);
    if (free_) {
      double d = 0.0;
      total += detail::dispersion_prior(tau, spec_.disp_mean, spec_.disp_sd, grad ? &d : nullptr);
      if (grad) (*grad)(p_) += d;
    }
    for (Eigen::Index j = 0; j < p_; ++j) {
      const double v = u(comm_off_ + j);
      const double prec = std::exp(v);
      const double sd = std::exp(-0.5 * v);
      double d_prec = 0.0;
      total += spike_slab_log_density(prec, spec_, grad ? &d_prec : nullptr) + v;
      total += math::normal_lpdf(beta(j), beta0(j), sd);
      if (grad) {
        const double diff = beta(j) - beta0(j);
        (*grad)(j) -= prec * diff;
        (*grad)(beta0_off_ + j) += prec * diff;
        // d/dv of [log N(beta | beta0, 1/prec)] = 0.5 - 0.5 prec diff^2
        (*grad)(comm_off_ + j) += d_prec * prec + 1.0 + 0.5 - 0.5 * prec * diff * diff;
      }
    }
    if (include_current_) {
      total += detail::loglik(model_, data_[0], beta, tau, 1.0, grad, 0, free_ ? p_ : -1);
      if (!std::isfinite(total)) return math::kNegInf;
    }
    for (std::size_t k = 1; k < data_.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k) - 1;
      double tau_h = detail::fixed_tau(model_);
      Eigen::Index tau_h_off = -1;
      if (free_) {
        tau_h_off = tau_hist_off_ + kk;
        tau_h = u(tau_h_off);
        double d = 0.0;
        total += detail::dispersion_prior(tau_h, r_.disp_hist_mean(kk), r_.disp_hist_sd(kk),
                                          grad ? &d : nullptr);
        if (grad) (*grad)(tau_h_off) += d;
      }
      total += detail::loglik(model_, data_[k], beta0, tau_h, 1.0, grad, beta0_off_, tau_h_off);
      if (!std::isfinite(total)) return math::kNegInf;
    }
    return std::isfinite(total) ? total : math::kNegInf;
  }

 private:
  GlmModel model_;
  std::vector<Dataset> data_;
  CPSpec spec_;
  CpResolved r_;
  bool include_current_;
  Eigen::Index p_;
  bool free_;
  Eigen::Index beta0_off_;
  Eigen::Index tau_hist_off_;
  Eigen::Index comm_off_;
};

}  // namespace

double spike_slab_log_density(double tau, const CPSpec& spec, double* d_tau) {
  if (!(tau > 0.0)) return math::kNegInf;
  const double a = spec.p_spike > 0.0
                       ? std::log(spec.p_spike) + math::half_normal_lpdf(tau, spec.spike_mean, spec.spike_sd)
                       : math::kNegInf;
  const double b = spec.p_spike < 1.0 ? std::log1p(-spec.p_spike) +
                                            math::half_normal_lpdf(tau, spec.slab_mean, spec.slab_sd)
                                      : math::kNegInf;
  const double total = math::log_sum_exp(a, b);
  if (d_tau) {
    const double wa = a == math::kNegInf ? 0.0 : std::exp(a - total);
    const double wb = b == math::kNegInf ? 0.0 : std::exp(b - total);
    *d_tau += wa * math::normal_lpdf_dx(tau, spec.spike_mean, spec.spike_sd) +
              wb * math::normal_lpdf_dx(tau, spec.slab_mean, spec.slab_sd);
  }
  return total;
}

double cp_log_density(const GlmModel& model, const Eigen::VectorXd& beta,
                      const Eigen::VectorXd& beta0, const Eigen::VectorXd& comm, double phi,
                      const std::vector<double>& phi_hist, std::span<const Dataset> data,
                      const CPSpec& spec, bool include_current) {
  detail::require_historical(data, "commensurate prior");
  const Eigen::Index p = data[0].cols();
  const auto H = static_cast<Eigen::Index>(data.size()) - 1;
  const CpResolved r = resolve(spec, p, H);
  const bool free = model.samples_dispersion();
  if (beta.size() != p || beta0.size() != p || comm.size() != p) {
    throw ShapeError("commensurate prior parameters have the wrong dimensions");
  }
  if (free && static_cast<Eigen::Index>(phi_hist.size()) != H) {
    throw ShapeError("need one historical dispersion per set");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    total += math::normal_lpdf(beta0(j), r.beta0_mean(j), r.beta0_sd(j));
    total += spike_slab_log_density(comm(j), spec);
    total += math::normal_lpdf(beta(j), beta0(j), 1.0 / std::sqrt(comm(j)));
  }
  const double phi_c = free ? phi : model.fixed_dispersion();
  if (free) total += math::half_normal_lpdf(phi, spec.disp_mean, spec.disp_sd);
  if (include_current) total += log_likelihood(model, beta, phi_c, data[0]);
  for (Eigen::Index k = 0; k < H; ++k) {
    const double phi_h = free ? phi_hist[static_cast<std::size_t>(k)] : model.fixed_dispersion();
    if (free) total += math::half_normal_lpdf(phi_h, r.disp_hist_mean(k), r.disp_hist_sd(k));
    total += log_likelihood(model, beta0, phi_h, data[k + 1]);
  }
  return total;
}

TargetPtr make_cp_target(const GlmModel& model, std::span<const Dataset> data, const CPSpec& spec,
                         bool include_current) {
  detail::require_historical(data, "commensurate prior");
  for (const auto& d : data) validate_responses(model, d);
  const Eigen::Index p = data[0].cols();
  const auto H = static_cast<Eigen::Index>(data.size()) - 1;
  CpResolved r = resolve(spec, p, H);
  const auto& names = data[0].column_names;
  ParameterSpace space = glm_parameter_space(model, names);
  space.add("beta_hist", Transform::identity, detail::suffixed(names, "_hist"));
  if (model.samples_dispersion()) {
    std::vector<std::string> disp;
    for (Eigen::Index k = 1; k <= H; ++k) disp.push_back("dispersion_hist_" + std::to_string(k));
    space.add("dispersion_hist", Transform::log, disp);
  }
  space.add("comm", Transform::log, detail::prefixed("comm_", names));
  return std::make_shared<CpTarget>(std::move(space), model,
                                    std::vector<Dataset>(data.begin(), data.end()), spec,
                                    std::move(r), include_current);
}

}  // namespace hdprior
