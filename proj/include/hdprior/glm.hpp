#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hdprior/errors.hpp"

namespace hdprior {

enum class FamilyKind { gaussian, binomial, poisson, gamma, inverse_gaussian };

enum class LinkKind {
  identity,
  log,
  logit,
  probit,
  cloglog,
  cauchit,
  inverse,
  inverse_squared,
  sqrt
};

/// Exponential-family response distribution. Gaussian dispersion is the variance;
/// gamma and inverse Gaussian use the shape/precision convention a(phi) = phi.
class Family {
 public:
  constexpr explicit Family(FamilyKind kind) : kind_(kind) {}

  static Family parse(std::string_view name);

  constexpr FamilyKind kind() const { return kind_; }
  std::string_view name() const;

  /// True for binomial and Poisson, whose dispersion is fixed at 1.
  constexpr bool dispersion_fixed() const {
    return kind_ == FamilyKind::binomial || kind_ == FamilyKind::poisson;
  }

  LinkKind canonical_link() const;
  double variance(double mu) const;
  bool valid_mean(double mu) const;
  bool valid_response(double y) const;

  friend constexpr bool operator==(Family, Family) = default;

 private:
  FamilyKind kind_;
};

/// Mean link g(mu) = eta.
class Link {
 public:
  constexpr explicit Link(LinkKind kind) : kind_(kind) {}

  static Link parse(std::string_view name);

  constexpr LinkKind kind() const { return kind_; }
  std::string_view name() const;

  double linkfun(double mu) const;
  double linkinv(double eta) const;
  /// d mu / d eta
  double mu_eta(double eta) const;

  bool admissible_for(Family family) const;

  friend constexpr bool operator==(Link, Link) = default;

 private:
  LinkKind kind_;
};

/// A family/link pair, optionally with a known (not sampled) dispersion.
class GlmModel {
 public:
  GlmModel(Family family, Link link, std::optional<double> known_dispersion = std::nullopt);
  explicit GlmModel(Family family);

  Family family() const { return family_; }
  Link link() const { return link_; }
  std::optional<double> known_dispersion() const { return known_dispersion_; }

  /// Whether the dispersion is a free parameter (sampled on the log scale).
  bool samples_dispersion() const;
  /// The dispersion used when it is not sampled.
  double fixed_dispersion() const;

 private:
  Family family_;
  Link link_;
  std::optional<double> known_dispersion_;
};

enum class DataRole { current, historical };

/// Responses, design matrix and offsets for one data set.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::VectorXd offset;
  std::vector<std::string> column_names;
  DataRole role = DataRole::current;
  int history_index = 0;  // h for historical data, 1-based

  Eigen::Index rows() const { return y.size(); }
  Eigen::Index cols() const { return X.cols(); }
};

/// Builds a dataset, checking shapes and finiteness. An empty offset means zeros;
/// empty names become x1..xp.
Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd X, Eigen::VectorXd offset = {},
                     std::vector<std::string> column_names = {});

/// Throws DataError if a response lies outside the family's support.
void validate_responses(const GlmModel& model, const Dataset& data);

/// Row-wise concatenation of data sets sharing the same columns.
Dataset stack_datasets(std::span<const Dataset> parts);

/// Per-observation log-likelihood and its derivatives with respect to the linear
/// predictor and tau = log(phi).
struct ObservationTerms {
  double loglik = 0.0;
  double d_eta = 0.0;
  double d_tau = 0.0;
};

/// Quantities shared by all observations at a given tau.
struct DispersionTerms {
  double tau = 0.0;
  double phi = 1.0;
  double inv_phi = 1.0;
  double lgamma_shape = 0.0;   // gamma family: lgamma(1/phi)
  double digamma_shape = 0.0;  // gamma family: digamma(1/phi)

  static DispersionTerms make(const GlmModel& model, double tau);
};

/// Fills `out` for response y at linear predictor eta (offset included). Returns
/// false when eta maps outside the family's mean domain.
bool observation_terms(const GlmModel& model, double y, double eta, const DispersionTerms& disp,
                       ObservationTerms& out) noexcept;

/// Gradient accumulator for accumulate_log_likelihood; `beta` must be sized p.
struct LikelihoodGradient {
  Eigen::VectorXd beta;
  double tau = 0.0;
};

/// weight * sum_i log f(y_i | beta, phi = exp(tau)). Adds weight * gradient into
/// `grad` when non-null. Returns -inf (gradient unspecified) when any mean is outside
/// the domain. No shape checks; intended for inner loops.
double accumulate_log_likelihood(const GlmModel& model, const Dataset& data,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta, double tau,
                                 double weight, LikelihoodGradient* grad);

/// Fully normalized log-likelihood, linear predictor X beta + offset.
double log_likelihood(const GlmModel& model, const Eigen::VectorXd& beta, double phi,
                      const Dataset& data);

/// Gradient of log_likelihood with respect to beta, followed by tau = log(phi) when
/// the dispersion is sampled.
Eigen::VectorXd log_likelihood_grad(const GlmModel& model, const Eigen::VectorXd& beta,
                                    double phi, const Dataset& data);

/// Expected Fisher information in (beta, tau) coordinates, (p+1)x(p+1) when the
/// dispersion is sampled and p x p otherwise.
Eigen::MatrixXd expected_information(const GlmModel& model, const Eigen::VectorXd& beta,
                                     double phi, const Dataset& data);

struct MleFit {
  Eigen::VectorXd beta_hat;
  double phi_hat = 1.0;
  Eigen::MatrixXd info;  // expected information in (beta, tau)
  bool converged = false;
  int iterations = 0;

  /// (beta_hat, log phi_hat) when the dispersion is sampled, else beta_hat.
  Eigen::VectorXd theta_hat(const GlmModel& model) const;
};

/// ConvergenceError carrying the last IRLS iterate (converged == false).
class MleConvergenceError : public ConvergenceError {
 public:
  MleConvergenceError(const std::string& what, MleFit partial)
      : ConvergenceError(what), partial_(std::move(partial)) {}
  const MleFit& partial() const { return partial_; }

 private:
  MleFit partial_;
};

/// Maximum likelihood by iteratively reweighted least squares (gradient sup-norm
/// tolerance 1e-8, at most 100 iterations), followed by ML estimation of the
/// dispersion. Throws SingularityError for rank-deficient designs and
/// ConvergenceError when IRLS fails or diverges.
MleFit fit_mle(const GlmModel& model, const Dataset& data);

}  // namespace hdprior
