#include "hdprior/glm.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <sstream>

#include "hdprior/math.hpp"

namespace hdprior {

namespace {

constexpr double kClampLow = 1e-12;
constexpr double kClampHigh = 1.0 - 1e-12;

double std_normal_pdf(double x) { return std::exp(-math::kLogSqrt2Pi - 0.5 * x * x); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

bool is_integer(double y) { return std::floor(y) == y; }

// log mu, log(1 - mu) and d mu / d eta for the Bernoulli family.
struct BernoulliMean {
  double mu;
  double log_mu;
  double log1m_mu;
  double dmu;
};

bool bernoulli_mean(LinkKind link, double eta, BernoulliMean& m) {
  switch (link) {
    case LinkKind::logit: {
      m.log_mu = math::log_inv_logit(eta);
      m.log1m_mu = math::log_inv_logit(-eta);
      m.mu = std::exp(m.log_mu);
      m.dmu = std::exp(m.log_mu + m.log1m_mu);
      return true;
    }
    case LinkKind::probit: {
      // One tail evaluation; the complement of a mass below 1/2 is accurate.
      const double lower = math::std_normal_lcdf(-std::abs(eta));
      const double upper = std::log1p(-std::exp(lower));
      m.log_mu = eta <= 0.0 ? lower : upper;
      m.log1m_mu = eta <= 0.0 ? upper : lower;
      m.mu = std::exp(m.log_mu);
      m.dmu = std_normal_pdf(eta);
      return std::isfinite(m.log_mu) && std::isfinite(m.log1m_mu);
    }
    case LinkKind::cauchit: {
      m.mu = std::atan2(1.0, -eta) / std::numbers::pi;
      const double upper = std::atan2(1.0, eta) / std::numbers::pi;
      m.log_mu = std::log(m.mu);
      m.log1m_mu = std::log(upper);
      m.dmu = 1.0 / (std::numbers::pi * (1.0 + eta * eta));
      return m.mu > 0.0 && upper > 0.0;
    }
    case LinkKind::cloglog: {
      const double e = std::exp(eta);
      double mu = -std::expm1(-e);
      if (mu < kClampLow || mu > kClampHigh) {
        mu = std::clamp(mu, kClampLow, kClampHigh);
        m.mu = mu;
        m.log_mu = std::log(mu);
        m.log1m_mu = std::log1p(-mu);
        m.dmu = 0.0;
        return true;
      }
      m.mu = mu;
      m.log_mu = std::log(mu);
      m.log1m_mu = -e;
      m.dmu = std::exp(eta - e);
      return true;
    }
    case LinkKind::log: {
      if (!(eta < 0.0)) return false;
      m.mu = std::exp(eta);
      m.log_mu = eta;
      m.log1m_mu = std::log(-std::expm1(eta));
      m.dmu = m.mu;
      return true;
    }
    default:
      return false;
  }
}

// Mean and d mu / d eta for the non-Bernoulli families.
bool mean_and_derivative(LinkKind link, double eta, double& mu, double& dmu) {
  switch (link) {
    case LinkKind::identity:
      mu = eta;
      dmu = 1.0;
      return true;
    case LinkKind::log:
      mu = std::exp(eta);
      dmu = mu;
      return true;
    case LinkKind::inverse:
      if (eta == 0.0) return false;
      mu = 1.0 / eta;
      dmu = -mu * mu;
      return true;
    case LinkKind::inverse_squared:
      if (!(eta > 0.0)) return false;
      mu = 1.0 / std::sqrt(eta);
      dmu = -0.5 * mu * mu * mu;
      return true;
    case LinkKind::sqrt:
      if (!(eta > 0.0)) return false;
      mu = eta * eta;
      dmu = 2.0 * eta;
      return true;
    default:
      return false;
  }
}

std::string describe(Family f, Link l) {
  std::ostringstream os;
  os << f.name() << "/" << l.name();
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Family

Family Family::parse(std::string_view name) {
  if (name == "gaussian" || name == "normal") return Family(FamilyKind::gaussian);
  if (name == "binomial" || name == "bernoulli") return Family(FamilyKind::binomial);
  if (name == "poisson") return Family(FamilyKind::poisson);
  if (name == "gamma" || name == "Gamma") return Family(FamilyKind::gamma);
  if (name == "inverse_gaussian" || name == "inverse.gaussian") {
    return Family(FamilyKind::inverse_gaussian);
  }
  throw DomainError("unknown family '" + std::string(name) + "'");
}

std::string_view Family::name() const {
  switch (kind_) {
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::binomial: return "binomial";
    case FamilyKind::poisson: return "poisson";
    case FamilyKind::gamma: return "gamma";
    case FamilyKind::inverse_gaussian: return "inverse_gaussian";
  }
  return "?";
}

LinkKind Family::canonical_link() const {
  switch (kind_) {
    case FamilyKind::gaussian: return LinkKind::identity;
    case FamilyKind::binomial: return LinkKind::logit;
    case FamilyKind::poisson: return LinkKind::log;
    case FamilyKind::gamma: return LinkKind::inverse;
    case FamilyKind::inverse_gaussian: return LinkKind::inverse_squared;
  }
  return LinkKind::identity;
}

double Family::variance(double mu) const {
  switch (kind_) {
    case FamilyKind::gaussian: return 1.0;
    case FamilyKind::binomial: return mu * (1.0 - mu);
    case FamilyKind::poisson: return mu;
    case FamilyKind::gamma: return mu * mu;
    case FamilyKind::inverse_gaussian: return mu * mu * mu;
  }
  return 1.0;
}

bool Family::valid_mean(double mu) const {
  if (!std::isfinite(mu)) return false;
  switch (kind_) {
    case FamilyKind::gaussian: return true;
    case FamilyKind::binomial: return mu > 0.0 && mu < 1.0;
    default: return mu > 0.0;
  }
}

bool Family::valid_response(double y) const {
  if (!std::isfinite(y)) return false;
  switch (kind_) {
    case FamilyKind::gaussian: return true;
    case FamilyKind::binomial: return y == 0.0 || y == 1.0;
    case FamilyKind::poisson: return y >= 0.0 && is_integer(y);
    default: return y > 0.0;
  }
}

// ---------------------------------------------------------------------------
// Link

Link Link::parse(std::string_view name) {
  if (name == "identity") return Link(LinkKind::identity);
  if (name == "log") return Link(LinkKind::log);
  if (name == "logit") return Link(LinkKind::logit);
  if (name == "probit") return Link(LinkKind::probit);
  if (name == "cloglog") return Link(LinkKind::cloglog);
  if (name == "cauchit") return Link(LinkKind::cauchit);
  if (name == "inverse") return Link(LinkKind::inverse);
  if (name == "inverse_squared" || name == "1/mu^2") return Link(LinkKind::inverse_squared);
  if (name == "sqrt") return Link(LinkKind::sqrt);
  throw DomainError("unknown link '" + std::string(name) + "'");
}

std::string_view Link::name() const {
  switch (kind_) {
    case LinkKind::identity: return "identity";
    case LinkKind::log: return "log";
    case LinkKind::logit: return "logit";
    case LinkKind::probit: return "probit";
    case LinkKind::cloglog: return "cloglog";
    case LinkKind::cauchit: return "cauchit";
    case LinkKind::inverse: return "inverse";
    case LinkKind::inverse_squared: return "inverse_squared";
    case LinkKind::sqrt: return "sqrt";
  }
  return "?";
}

double Link::linkfun(double mu) const {
  switch (kind_) {
    case LinkKind::identity: return mu;
    case LinkKind::log: return std::log(mu);
    case LinkKind::logit: return math::logit(mu);
    case LinkKind::probit: return math::std_normal_quantile(mu);
    case LinkKind::cloglog: return std::log(-std::log1p(-mu));
    case LinkKind::cauchit: return std::tan(std::numbers::pi * (mu - 0.5));
    case LinkKind::inverse: return 1.0 / mu;
    case LinkKind::inverse_squared: return 1.0 / (mu * mu);
    case LinkKind::sqrt: return std::sqrt(mu);
  }
  return mu;
}

double Link::linkinv(double eta) const {
  switch (kind_) {
    case LinkKind::identity: return eta;
    case LinkKind::log: return std::exp(eta);
    case LinkKind::logit: return math::inv_logit(eta);
    case LinkKind::probit: return std_normal_cdf(eta);
    case LinkKind::cloglog: return std::clamp(-std::expm1(-std::exp(eta)), kClampLow, kClampHigh);
    case LinkKind::cauchit: return std::atan2(1.0, -eta) / std::numbers::pi;
    case LinkKind::inverse: return 1.0 / eta;
    case LinkKind::inverse_squared: return 1.0 / std::sqrt(eta);
    case LinkKind::sqrt: return eta * eta;
  }
  return eta;
}

double Link::mu_eta(double eta) const {
  switch (kind_) {
    case LinkKind::identity: return 1.0;
    case LinkKind::log: return std::exp(eta);
    case LinkKind::logit: {
      const double e = std::exp(-std::abs(eta));
      return e / ((1.0 + e) * (1.0 + e));
    }
    case LinkKind::probit: return std_normal_pdf(eta);
    case LinkKind::cloglog: return std::exp(eta - std::exp(eta));
    case LinkKind::cauchit: return 1.0 / (std::numbers::pi * (1.0 + eta * eta));
    case LinkKind::inverse: return -1.0 / (eta * eta);
    case LinkKind::inverse_squared: return -0.5 * std::pow(eta, -1.5);
    case LinkKind::sqrt: return 2.0 * eta;
  }
  return 1.0;
}

bool Link::admissible_for(Family family) const {
  switch (family.kind()) {
    case FamilyKind::gaussian:
      return kind_ == LinkKind::identity || kind_ == LinkKind::log || kind_ == LinkKind::inverse;
    case FamilyKind::binomial:
      return kind_ == LinkKind::logit || kind_ == LinkKind::probit || kind_ == LinkKind::cauchit ||
             kind_ == LinkKind::log || kind_ == LinkKind::cloglog;
    case FamilyKind::poisson:
      return kind_ == LinkKind::log || kind_ == LinkKind::identity || kind_ == LinkKind::sqrt;
    case FamilyKind::gamma:
      return kind_ == LinkKind::inverse || kind_ == LinkKind::identity || kind_ == LinkKind::log;
    case FamilyKind::inverse_gaussian:
      return kind_ == LinkKind::inverse_squared || kind_ == LinkKind::inverse ||
             kind_ == LinkKind::identity || kind_ == LinkKind::log;
  }
  return false;
}

// ---------------------------------------------------------------------------
// GlmModel

GlmModel::GlmModel(Family family, Link link, std::optional<double> known_dispersion)
    : family_(family), link_(link), known_dispersion_(known_dispersion) {
  if (!link.admissible_for(family)) {
    throw DomainError("link " + std::string(link.name()) + " is not admissible for family " +
                      std::string(family.name()));
  }
  if (known_dispersion_) {
    if (family.dispersion_fixed()) {
      throw DomainError("family " + std::string(family.name()) + " has dispersion fixed at 1");
    }
    if (!(*known_dispersion_ > 0.0) || !std::isfinite(*known_dispersion_)) {
      throw DomainError("known dispersion must be positive and finite");
    }
  }
}

GlmModel::GlmModel(Family family) : GlmModel(family, Link(family.canonical_link())) {}

bool GlmModel::samples_dispersion() const {
  return !family_.dispersion_fixed() && !known_dispersion_;
}

double GlmModel::fixed_dispersion() const {
  if (family_.dispersion_fixed()) return 1.0;
  if (known_dispersion_) return *known_dispersion_;
  throw DomainError("dispersion of " + describe(family_, link_) + " is a free parameter");
}

// ---------------------------------------------------------------------------
// Dataset

Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd X, Eigen::VectorXd offset,
                     std::vector<std::string> column_names) {
  if (y.size() < 1) throw ShapeError("dataset must have at least one row");
  if (X.rows() != y.size()) {
    throw ShapeError("design matrix has " + std::to_string(X.rows()) + " rows but response has " +
                     std::to_string(y.size()));
  }
  if (offset.size() == 0) offset = Eigen::VectorXd::Zero(y.size());
  if (offset.size() != y.size()) throw ShapeError("offset length does not match response");
  if (column_names.empty()) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) column_names.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(column_names.size()) != X.cols()) {
    throw ShapeError("number of column names does not match design columns");
  }
  if (!y.allFinite() || !X.allFinite() || !offset.allFinite()) {
    throw DataError("dataset contains missing or non-finite values");
  }
  Dataset d;
  d.y = std::move(y);
  d.X = std::move(X);
  d.offset = std::move(offset);
  d.column_names = std::move(column_names);
  return d;
}

void validate_responses(const GlmModel& model, const Dataset& data) {
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    if (!model.family().valid_response(data.y(i))) {
      std::ostringstream os;
      os << "response " << data.y(i) << " at row " << (i + 1) << " is outside the support of the "
         << model.family().name() << " family";
      throw DataError(os.str());
    }
  }
}

Dataset stack_datasets(std::span<const Dataset> parts) {
  if (parts.empty()) throw ShapeError("nothing to stack");
  Eigen::Index n = 0;
  const Eigen::Index p = parts.front().cols();
  for (const auto& d : parts) {
    if (d.cols() != p) throw ShapeError("stacked datasets must share columns");
    n += d.rows();
  }
  Eigen::VectorXd y(n), offset(n);
  Eigen::MatrixXd X(n, p);
  Eigen::Index r = 0;
  for (const auto& d : parts) {
    y.segment(r, d.rows()) = d.y;
    offset.segment(r, d.rows()) = d.offset;
    X.middleRows(r, d.rows()) = d.X;
    r += d.rows();
  }
  Dataset out = make_dataset(std::move(y), std::move(X), std::move(offset), parts.front().column_names);
  out.role = parts.front().role;
  out.history_index = parts.front().history_index;
  return out;
}

// ---------------------------------------------------------------------------
// Likelihood

DispersionTerms DispersionTerms::make(const GlmModel& model, double tau) {
  DispersionTerms d;
  d.tau = tau;
  d.phi = std::exp(tau);
  d.inv_phi = std::exp(-tau);
  if (model.family().kind() == FamilyKind::gamma && std::isfinite(d.inv_phi) && d.inv_phi > 0.0) {
    d.lgamma_shape = std::lgamma(d.inv_phi);
    d.digamma_shape = boost::math::digamma(d.inv_phi);
  }
  return d;
}

bool observation_terms(const GlmModel& model, double y, double eta, const DispersionTerms& disp,
                       ObservationTerms& out) noexcept {
  if (!std::isfinite(eta)) return false;
  const FamilyKind family = model.family().kind();
  const LinkKind link = model.link().kind();

  if (family == FamilyKind::binomial) {
    BernoulliMean m{};
    if (!bernoulli_mean(link, eta, m)) return false;
    if (y > 0.5) {
      out.loglik = m.log_mu;
      out.d_eta = link == LinkKind::logit ? std::exp(m.log1m_mu) : m.dmu / m.mu;
    } else {
      out.loglik = m.log1m_mu;
      out.d_eta = link == LinkKind::logit ? -m.mu : -m.dmu / std::exp(m.log1m_mu);
    }
    out.d_tau = 0.0;
    return std::isfinite(out.loglik) && std::isfinite(out.d_eta);
  }

  double mu = 0.0;
  double dmu = 0.0;
  if (!mean_and_derivative(link, eta, mu, dmu)) return false;
  if (!model.family().valid_mean(mu)) return false;

  double d_mu = 0.0;
  switch (family) {
    case FamilyKind::gaussian: {
      const double r = y - mu;
      out.loglik = -math::kLogSqrt2Pi - 0.5 * disp.tau - 0.5 * r * r * disp.inv_phi;
      d_mu = r * disp.inv_phi;
      out.d_tau = -0.5 + 0.5 * r * r * disp.inv_phi;
      break;
    }
    case FamilyKind::poisson: {
      const double log_fact = std::lgamma(y + 1.0);
      out.d_tau = 0.0;
      if (link == LinkKind::log) {
        out.loglik = y * eta - mu - log_fact;
        out.d_eta = y - mu;
        return std::isfinite(out.loglik);
      }
      out.loglik = y * std::log(mu) - mu - log_fact;
      d_mu = y / mu - 1.0;
      break;
    }
    case FamilyKind::gamma: {
      const double k = disp.inv_phi;
      const double ratio = y / mu;
      const double log_k_ratio = -disp.tau + std::log(ratio);
      out.loglik = k * log_k_ratio - k * ratio - std::log(y) - disp.lgamma_shape;
      d_mu = k * (y - mu) / (mu * mu);
      out.d_tau = -k * (log_k_ratio + 1.0 - ratio - disp.digamma_shape);
      break;
    }
    case FamilyKind::inverse_gaussian: {
      const double r = y - mu;
      const double q = r * r / (mu * mu * y);
      out.loglik = -math::kLogSqrt2Pi - 0.5 * disp.tau - 1.5 * std::log(y) - 0.5 * q * disp.inv_phi;
      d_mu = r * disp.inv_phi / (mu * mu * mu);
      out.d_tau = -0.5 + 0.5 * q * disp.inv_phi;
      break;
    }
    case FamilyKind::binomial:
      return false;
  }
  out.d_eta = d_mu * dmu;
  return std::isfinite(out.loglik) && std::isfinite(out.d_eta);
}

double accumulate_log_likelihood(const GlmModel& model, const Dataset& data,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta, double tau,
                                 double weight, LikelihoodGradient* grad) {
  if (weight == 0.0) return 0.0;
  const Eigen::VectorXd eta = data.X * beta + data.offset;
  const DispersionTerms disp = DispersionTerms::make(model, tau);
  const Eigen::Index n = data.rows();
  Eigen::VectorXd d_eta;
  if (grad) d_eta.resize(n);
  double total = 0.0;
  double d_tau = 0.0;
  ObservationTerms t;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!observation_terms(model, data.y(i), eta(i), disp, t)) return math::kNegInf;
    total += t.loglik;
    if (grad) {
      d_eta(i) = t.d_eta;
      d_tau += t.d_tau;
    }
  }
  if (grad) {
    grad->beta.noalias() += weight * (data.X.transpose() * d_eta);
    if (model.samples_dispersion()) grad->tau += weight * d_tau;
  }
  return weight * total;
}

namespace {

double resolve_tau(const GlmModel& model, double phi) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw DomainError("dispersion must be positive and finite");
  if (!model.samples_dispersion()) {
    const double fixed = model.fixed_dispersion();
    if (std::abs(phi - fixed) > 1e-12 * std::max(1.0, fixed)) {
      throw DomainError("dispersion of " + describe(model.family(), model.link()) + " is fixed at " +
                        std::to_string(fixed));
    }
  }
  return std::log(phi);
}

void check_beta(const Eigen::VectorXd& beta, const Dataset& data) {
  if (beta.size() != data.cols()) {
    throw ShapeError("coefficient vector has length " + std::to_string(beta.size()) +
                     " but design has " + std::to_string(data.cols()) + " columns");
  }
  if (!beta.allFinite()) throw DomainError("non-finite coefficients");
}

}  // namespace

double log_likelihood(const GlmModel& model, const Eigen::VectorXd& beta, double phi,
                      const Dataset& data) {
  check_beta(beta, data);
  const double tau = resolve_tau(model, phi);
  validate_responses(model, data);
  const double value = accumulate_log_likelihood(model, data, beta, tau, 1.0, nullptr);
  if (!std::isfinite(value)) {
    throw DomainError("linear predictor maps outside the mean domain of " +
                      describe(model.family(), model.link()));
  }
  return value;
}

Eigen::VectorXd log_likelihood_grad(const GlmModel& model, const Eigen::VectorXd& beta,
                                    double phi, const Dataset& data) {
  check_beta(beta, data);
  const double tau = resolve_tau(model, phi);
  validate_responses(model, data);
  LikelihoodGradient g{Eigen::VectorXd::Zero(beta.size()), 0.0};
  const double value = accumulate_log_likelihood(model, data, beta, tau, 1.0, &g);
  if (!std::isfinite(value)) {
    throw DomainError("linear predictor maps outside the mean domain of " +
                      describe(model.family(), model.link()));
  }
  if (!model.samples_dispersion()) return g.beta;
  Eigen::VectorXd out(beta.size() + 1);
  out << g.beta, g.tau;
  return out;
}

Eigen::MatrixXd expected_information(const GlmModel& model, const Eigen::VectorXd& beta,
                                     double phi, const Dataset& data) {
  check_beta(beta, data);
  resolve_tau(model, phi);
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.cols();
  const Eigen::VectorXd eta = data.X * beta + data.offset;
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = model.link().linkinv(eta(i));
    if (!model.family().valid_mean(mu) || !std::isfinite(eta(i))) {
      throw DomainError("linear predictor maps outside the mean domain of " +
                        describe(model.family(), model.link()));
    }
    const double dmu = model.link().mu_eta(eta(i));
    w(i) = dmu * dmu / model.family().variance(mu);
  }
  const bool free = model.samples_dispersion();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(free ? p + 1 : p, free ? p + 1 : p);
  info.topLeftCorner(p, p) = data.X.transpose() * w.asDiagonal() * data.X / phi;
  if (free) {
    double tau_block = 0.0;
    switch (model.family().kind()) {
      case FamilyKind::gaussian:
      case FamilyKind::inverse_gaussian:
        tau_block = 0.5 * static_cast<double>(n);
        break;
      case FamilyKind::gamma: {
        const double k = 1.0 / phi;
        tau_block = static_cast<double>(n) * k * k * (boost::math::trigamma(k) - 1.0 / k);
        break;
      }
      default:
        break;
    }
    info(p, p) = tau_block;
  }
  // Exact symmetry.
  info = 0.5 * (info + info.transpose()).eval();
  return info;
}

Eigen::VectorXd MleFit::theta_hat(const GlmModel& model) const {
  if (!model.samples_dispersion()) return beta_hat;
  Eigen::VectorXd theta(beta_hat.size() + 1);
  theta << beta_hat, std::log(phi_hat);
  return theta;
}

// ---------------------------------------------------------------------------
// Maximum likelihood

namespace {

double starting_mean(FamilyKind family, double y) {
  switch (family) {
    case FamilyKind::binomial: return (y + 0.5) / 2.0;
    case FamilyKind::poisson: return y + 0.1;
    default: return y;
  }
}

// Unit-dispersion log-likelihood and score, used to drive IRLS.
double unit_loglik(const GlmModel& model, const Dataset& data, const Eigen::VectorXd& beta,
                   Eigen::VectorXd* score) {
  LikelihoodGradient g{Eigen::VectorXd::Zero(beta.size()), 0.0};
  const double v = accumulate_log_likelihood(model, data, beta, 0.0, 1.0, score ? &g : nullptr);
  if (score) *score = g.beta;
  return v;
}

double gamma_profile_tau(const GlmModel& model, const Dataset& data, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = data.X * beta + data.offset;
  double pearson = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double mu = model.link().linkinv(eta(i));
    pearson += std::pow((data.y(i) - mu) / mu, 2);
  }
  pearson /= static_cast<double>(data.rows());
  const double center = std::log(std::max(pearson, 1e-300));
  auto negative_profile = [&](double tau) {
    const double v = accumulate_log_likelihood(model, data, beta, tau, 1.0, nullptr);
    return std::isfinite(v) ? -v : math::kInf;
  };
  const auto result = boost::math::tools::brent_find_minima(negative_profile, center - 12.0,
                                                            center + 12.0, 52);
  return result.first;
}

}  // namespace

MleFit fit_mle(const GlmModel& model, const Dataset& data) {
  validate_responses(model, data);
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.cols();
  if (n <= p) throw SingularityError("maximum likelihood needs more rows than columns");
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X);
    if (qr.rank() < p) throw SingularityError("design matrix is rank deficient");
  }

  const Family family = model.family();
  const Link link = model.link();

  Eigen::VectorXd eta(n);
  for (Eigen::Index i = 0; i < n; ++i) eta(i) = link.linkfun(starting_mean(family.kind(), data.y(i)));

  MleFit fit;
  Eigen::VectorXd beta;
  double loglik = math::kNegInf;
  bool have_beta = false;
  Eigen::VectorXd score;
  Eigen::VectorXd w(n), z(n);

  for (int iter = 1; iter <= 100; ++iter) {
    fit.iterations = iter;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = link.linkinv(eta(i));
      const double dmu = link.mu_eta(eta(i));
      const double var = family.variance(mu);
      w(i) = dmu * dmu / var;
      z(i) = eta(i) - data.offset(i) + (data.y(i) - mu) / dmu;
    }
    const Eigen::VectorXd sqrt_w = w.cwiseSqrt();
    const Eigen::MatrixXd wx = sqrt_w.asDiagonal() * data.X;
    Eigen::VectorXd candidate = wx.colPivHouseholderQr().solve(sqrt_w.cwiseProduct(z));

    double cand_loglik = candidate.allFinite() ? unit_loglik(model, data, candidate, nullptr)
                                               : math::kNegInf;
    if (have_beta) {
      // Step halving toward the previous iterate on invalid or worse fits.
      for (int halving = 0; halving < 30 && !(cand_loglik >= loglik - 1e-10 * std::abs(loglik));
           ++halving) {
        candidate = 0.5 * (candidate + beta);
        cand_loglik = unit_loglik(model, data, candidate, nullptr);
      }
    }
    if (!std::isfinite(cand_loglik)) {
      fit.beta_hat = have_beta ? beta : candidate;
      throw MleConvergenceError("IRLS produced means outside the domain of " +
                                    describe(family, link),
                                fit);
    }
    const double step = have_beta ? (candidate - beta).lpNorm<Eigen::Infinity>() : math::kInf;
    beta = candidate;
    loglik = cand_loglik;
    have_beta = true;
    eta = data.X * beta + data.offset;

    if (beta.lpNorm<Eigen::Infinity>() > 1e6) {
      fit.beta_hat = beta;
      throw MleConvergenceError("IRLS diverged (|beta| > 1e6); possible separation", fit);
    }
    unit_loglik(model, data, beta, &score);
    const double grad_norm = score.lpNorm<Eigen::Infinity>();
    const double scale = 1.0 + beta.lpNorm<Eigen::Infinity>();
    if ((grad_norm <= 1e-8 && step <= 1e-6 * scale) || step <= 1e-13 * scale) {
      fit.converged = true;
      break;
    }
  }
  fit.beta_hat = beta;
  if (!fit.converged) {
    throw MleConvergenceError("IRLS did not converge in 100 iterations (boundary or separation)", fit);
  }

  // Dispersion.
  if (!model.samples_dispersion()) {
    fit.phi_hat = model.fixed_dispersion();
  } else {
    switch (family.kind()) {
      case FamilyKind::gaussian: {
        const Eigen::VectorXd mu = (data.X * beta + data.offset).unaryExpr([&](double e) {
          return link.linkinv(e);
        });
        fit.phi_hat = (data.y - mu).squaredNorm() / static_cast<double>(n);
        break;
      }
      case FamilyKind::inverse_gaussian: {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double mu = link.linkinv(eta(i));
          s += std::pow(data.y(i) - mu, 2) / (mu * mu * data.y(i));
        }
        fit.phi_hat = s / static_cast<double>(n);
        break;
      }
      case FamilyKind::gamma:
        fit.phi_hat = std::exp(gamma_profile_tau(model, data, beta));
        break;
      default:
        break;
    }
    if (!(fit.phi_hat > 0.0)) {
      throw MleConvergenceError("dispersion estimate is zero (perfect fit)", fit);
    }
  }
  fit.info = expected_information(model, beta, fit.phi_hat, data);
  return fit;
}

}  // namespace hdprior
