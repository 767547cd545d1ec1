#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hdprior/glm.hpp"
#include "hdprior/priors.hpp"
#include "hdprior/sampler.hpp"

namespace hdprior {

struct BridgeOptions {
  double tolerance = 1e-10;
  int max_iterations = 1000;
  /// Seed for the proposal draws; derived from the chain seeds when unset.
  std::optional<std::uint64_t> seed;
};

struct BridgeResult {
  double log_evidence = 0.0;
  int iterations = 0;
  double rel_change = 0.0;
  bool converged = false;
  Eigen::VectorXd proposal_mean;
  Eigen::MatrixXd proposal_chol;  // lower Cholesky factor of the proposal covariance
};

/// Iterative bridge sampling estimate of log of the integral of exp(target) over
/// the unconstrained space. In each chain the first half of the draws fits a
/// normal proposal and the second half enters the estimator.
BridgeResult bridge_sample(const Draws& draws, const LogTarget& target,
                           const BridgeOptions& options = {});

/// Initial prior with every scale multiplied by sqrt(H): the normalized version of
/// pi_0^(1/H).
InitialPriorHyper tempered_initial_prior(const InitialPriorHyper& h, Eigen::Index p, std::size_t H);

struct LogNCPoint {
  double a0 = 0.0;
  double lognc = 0.0;
  double min_ess_bulk = 0.0;  // NaN when no sampling was needed
  double max_rhat = 0.0;
  bool converged = true;
};

/// log of the integral of L(beta, phi | D0)^a0 pi_0(beta, phi).
LogNCPoint npp_lognc(const GlmModel& model, const Dataset& historical, double a0,
                     const SamplerConfig& config, const InitialPriorHyper& h = {});

struct LoessOptions {
  double span = 0.25;
  int degree = 2;
};

/// Estimates log Z_h over `a0_grid` for every historical data set (points run in
/// parallel), smooths the positive-a0 estimates with LOESS and pins a0 = 0 to 0.
std::vector<LogNCGrid> build_lognc_grid(const GlmModel& model, std::span<const Dataset> historical,
                                        const std::vector<double>& a0_grid,
                                        const SamplerConfig& config, const LoessOptions& loess = {},
                                        const InitialPriorHyper& h = {});

/// Smooths raw estimates on a grid starting at a0 = 0 (lognc_raw[0] must be 0).
LogNCGrid smooth_lognc(std::vector<double> a0, std::vector<double> raw, const LoessOptions& loess);

std::vector<double> default_a0_grid(int points = 21);

void write_lognc_csv(std::ostream& out, const LogNCGrid& grid);
LogNCGrid read_lognc_csv(std::istream& in);

/// w Z_I / (w Z_I + (1 - w) Z_V), computed on the log scale.
double rmap_weight(double w, double log_z_informative, double log_z_vague);

struct RmapResult {
  Draws draws;  // current-data parameters, mixed
  double gamma_tilde = 0.0;
  double log_z_informative = 0.0;
  double log_z_vague = 0.0;
  int informative_picks = 0;
  Draws informative;  // hierarchical model draws
  Draws vague;
};

RmapResult rmap_posterior(const GlmModel& model, std::span<const Dataset> data, const RMAPSpec& spec,
                          const SamplerConfig& config);

struct EvidenceResult {
  double log_evidence = 0.0;
  double log_posterior_constant = 0.0;  // log Z~(D)
  double log_prior_constant = 0.0;      // log C, 0 when the prior is normalized
  bool prior_sampled = false;
  BridgeResult posterior_bridge;
  std::optional<BridgeResult> prior_bridge;
  Diagnostics posterior_diagnostics;
};

/// log marginal likelihood log Z~(D) - log C, where C normalizes the prior.
EvidenceResult marginal_likelihood(const PriorSpec& spec, const GlmModel& model,
                                   std::span<const Dataset> data, const SamplerConfig& config);

double bayes_factor(double log_z1, double log_z2);
/// "substantial" for log BF >= log 3, "weak" for log BF >= 0, otherwise "none".
std::string bayes_factor_label(double log_bf);

/// Beta shapes with mean m and coefficient of variation cv.
std::pair<double, double> solve_beta_hyper(double mean, double cv);

/// a0 = n / (2 n0), capped at 1.
double a0_half_ratio(Eigen::Index n, Eigen::Index n0);

}  // namespace hdprior
