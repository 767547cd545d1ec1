#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hdprior/glm.hpp"
#include "hdprior/smooth.hpp"
#include "hdprior/target.hpp"

namespace hdprior {

/// Independent normals on beta and a half-normal on the dispersion. Empty vectors
/// take the defaults (mean 0, sd 10) at the model's dimension.
struct InitialPriorHyper {
  Eigen::VectorXd mu0;
  Eigen::VectorXd sigma0;
  double alpha0 = 0.0;
  double gamma0 = 10.0;

  InitialPriorHyper resolved(Eigen::Index p) const;
};

/// Bridge-sampled log normalizing constants of the power prior over a grid of a0.
struct LogNCGrid {
  std::vector<double> a0;
  std::vector<double> lognc_raw;
  std::vector<double> lognc_smooth;
  std::vector<double> min_ess_bulk;
  std::vector<double> max_rhat;
  bool reliable = true;

  Interpolant interpolant() const { return Interpolant(a0, lognc_smooth); }
};

struct InitialSpec {
  InitialPriorHyper h;
};

struct PPSpec {
  Eigen::VectorXd a0;  // one per historical data set, in [0, 1]
  InitialPriorHyper h;
};

struct NPPSpec {
  double a0_shape1 = 1.0;
  double a0_shape2 = 1.0;
  std::vector<LogNCGrid> grids;  // one per historical data set
  InitialPriorHyper h;
};

struct NAPPSpec {
  double a0_shape1 = 1.0;
  double a0_shape2 = 1.0;
  std::optional<Eigen::VectorXd> fixed_a0;  // when set, a0 is not sampled
};

struct BhmHyper {
  Eigen::VectorXd meta_mean_mean;  // mu_0j, default 0
  Eigen::VectorXd meta_mean_sd;    // sigma_0j, default 10
  Eigen::VectorXd meta_sd_mean;    // m_j, default 0
  Eigen::VectorXd meta_sd_sd;      // s_j, default 1
  double disp_mean = 0.0;
  double disp_sd = 10.0;
  Eigen::VectorXd disp_hist_mean;  // m_0h, default 0
  Eigen::VectorXd disp_hist_sd;    // s_0h, default 10

  BhmHyper resolved(Eigen::Index p, Eigen::Index H) const;
};

struct BHMSpec {
  BhmHyper h;
};

struct CPSpec {
  double p_spike = 0.1;
  double spike_mean = 200.0;
  double spike_sd = 0.1;
  double slab_mean = 0.0;
  double slab_sd = 5.0;
  Eigen::VectorXd beta0_mean;  // default 0
  Eigen::VectorXd beta0_sd;    // default 10
  double disp_mean = 0.0;
  double disp_sd = 10.0;
  Eigen::VectorXd disp_hist_mean;
  Eigen::VectorXd disp_hist_sd;
};

struct LEAPSpec {
  int K = 2;
  Eigen::VectorXd prob_conc;  // default all ones
  InitialPriorHyper h;
};

struct RMAPSpec {
  double w = 0.1;
  BhmHyper bhm;
  InitialPriorHyper vague;
};

using PriorSpec =
    std::variant<InitialSpec, PPSpec, NPPSpec, NAPPSpec, BHMSpec, CPSpec, LEAPSpec, RMAPSpec>;

std::string prior_name(const PriorSpec& spec);

/// Targets built for a prior. `vague` is only set for RMAP, where `primary` is the
/// hierarchical model on all data and `vague` the current-data posterior.
struct TargetSet {
  TargetPtr primary;
  TargetPtr vague;
};

/// Unnormalized log posterior for `spec`. data[0] is the current data set, the rest
/// are historical. With prior_only the current-data likelihood is dropped.
TargetSet build_target(const PriorSpec& spec, const GlmModel& model, std::span<const Dataset> data,
                       bool prior_only = false);

// Individual targets.

/// Initial prior times a0-weighted historical likelihoods (a0 empty = initial prior).
TargetPtr make_power_target(const GlmModel& model, std::span<const Dataset> data,
                            const Eigen::VectorXd& a0, const InitialPriorHyper& h,
                            bool include_current);
TargetPtr make_npp_target(const GlmModel& model, std::span<const Dataset> data, const NPPSpec& spec,
                          bool include_current);
TargetPtr make_napp_target(const GlmModel& model, std::span<const Dataset> data,
                           const NAPPSpec& spec, bool include_current);
TargetPtr make_bhm_target(const GlmModel& model, std::span<const Dataset> data, const BhmHyper& h,
                          bool include_current);
TargetPtr make_cp_target(const GlmModel& model, std::span<const Dataset> data, const CPSpec& spec,
                         bool include_current);
TargetPtr make_leap_target(const GlmModel& model, std::span<const Dataset> data,
                           const LEAPSpec& spec, bool include_current);

// Densities on the natural parameter scale (no transform Jacobians).

/// log pi_0(beta, phi) with the half-normal normalization included. phi is ignored
/// when the dispersion is not sampled.
double initial_prior_log_density(const GlmModel& model, const Eigen::VectorXd& beta, double phi,
                                 const InitialPriorHyper& h);

/// sum_h a0_h * loglik(D_0h) + log pi_0.
double pp_log_kernel(const GlmModel& model, const Eigen::VectorXd& beta, double tau,
                     const Eigen::VectorXd& a0, std::span<const Dataset> historical,
                     const InitialPriorHyper& h);

/// sum_h [a0_h * loglik(D_0h) - lognc_h(a0_h) + log Beta(a0_h)] + log pi_0.
double npp_log_kernel(const GlmModel& model, const Eigen::VectorXd& beta, double tau,
                      const Eigen::VectorXd& a0, std::span<const Dataset> historical,
                      const NPPSpec& spec);

/// Historical MLE summary used by the asymptotic power prior.
struct NappComponent {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd info;
  Eigen::LLT<Eigen::MatrixXd> info_llt;
  double log_det_info = 0.0;
};

NappComponent napp_component(const GlmModel& model, const Dataset& historical);

/// sum_h [log N(theta | theta_hat_h, (a0_h I_h)^-1) + log Beta(a0_h)], theta = (beta, tau).
/// The Beta term is skipped when shapes are not positive.
double napp_log_density(const Eigen::VectorXd& theta, const Eigen::VectorXd& a0,
                        std::span<const NappComponent> comps, double shape1, double shape2);

/// Hierarchical model density on the natural scale. beta_hist[h] and phi_hist[h]
/// belong to historical set h.
struct BhmPoint {
  Eigen::VectorXd beta;
  double phi = 1.0;
  std::vector<Eigen::VectorXd> beta_hist;
  std::vector<double> phi_hist;
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
};

double bhm_log_density(const GlmModel& model, const BhmPoint& point, std::span<const Dataset> data,
                       const BhmHyper& h, bool include_current = true);

/// log of p N+(tau | spike) + (1 - p) N+(tau | slab).
double spike_slab_log_density(double tau, const CPSpec& spec, double* d_tau = nullptr);

double cp_log_density(const GlmModel& model, const Eigen::VectorXd& beta,
                      const Eigen::VectorXd& beta0, const Eigen::VectorXd& comm, double phi,
                      const std::vector<double>& phi_hist, std::span<const Dataset> data,
                      const CPSpec& spec, bool include_current = true);

/// Component 1 holds the current-data parameters.
double leap_log_density(const GlmModel& model, const std::vector<Eigen::VectorXd>& betas,
                        const std::vector<double>& phis, const Eigen::VectorXd& gamma,
                        std::span<const Dataset> data, const LEAPSpec& spec,
                        bool include_current = true);

}  // namespace hdprior
