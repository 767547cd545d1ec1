#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hdprior/target.hpp"

namespace hdprior {

struct SamplerConfig {
  int chains = 4;
  int iter_warmup = 1000;
  int iter_sampling = 2500;
  std::uint64_t seed = 1;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  double init_radius = 2.0;
  std::size_t threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

/// Post-warmup draws. Rows are ordered chain by chain.
struct Draws {
  std::vector<std::string> names;
  int chains = 0;
  int iterations = 0;
  Eigen::MatrixXd values;         // constrained outputs, rows x names
  Eigen::MatrixXd unconstrained;  // rows x target dim
  Eigen::VectorXd log_density;
  std::vector<std::uint8_t> divergent;
  std::vector<int> tree_depth;
  std::vector<int> n_leapfrog;
  Eigen::VectorXd accept_stat;
  Eigen::VectorXd energy_error;  // |H(selected) - H(initial)| per transition
  std::vector<double> step_size;  // per chain, after adaptation
  std::vector<Eigen::VectorXd> inv_metric;
  std::vector<std::uint64_t> chain_seeds;

  Eigen::Index rows() const { return values.rows(); }
  int column(const std::string& name) const;
  /// iterations x chains matrix of one output column.
  Eigen::MatrixXd chain_matrix(int col) const;
  int divergences() const;
};

/// Multinomial No-U-Turn sampler with step-size and diagonal metric adaptation.
Draws sample(const LogTarget& target, const SamplerConfig& config);

// Diagnostics on an iterations x chains matrix.

/// Rank-normalized split R-hat: max of the bulk and folded versions.
double split_rhat(const Eigen::MatrixXd& x);
/// Rank-normalized split bulk effective sample size.
double ess_bulk(const Eigen::MatrixXd& x);
/// Split effective sample size without rank normalization (for Monte Carlo SEs).
double ess_basic(const Eigen::MatrixXd& x);
/// Monte Carlo standard error of the mean.
double mcse_mean(const Eigen::MatrixXd& x);

struct Diagnostics {
  std::vector<std::string> names;
  Eigen::VectorXd rhat;
  Eigen::VectorXd ess_bulk;
  int divergences = 0;
  std::vector<double> mean_accept;  // per chain
  std::vector<double> step_size;

  double max_rhat() const;
  double min_ess_bulk() const;
};

Diagnostics diagnostics(const Draws& draws);

struct SummaryRow {
  std::string variable;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> quantiles;
};

/// Type-7 quantile of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double prob);

std::vector<SummaryRow> summarize(const Draws& draws,
                                  const std::vector<double>& probs = {0.025, 0.5, 0.975});

}  // namespace hdprior
