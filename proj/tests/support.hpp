#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "hdprior/glm.hpp"
#include "hdprior/rng.hpp"

namespace testing_support {

using hdprior::Dataset;
using hdprior::FamilyKind;
using hdprior::GlmModel;

// Draws a response with mean mu from the family (dispersion phi).
inline double draw_response(FamilyKind f, double mu, double phi, std::mt19937_64& gen) {
  switch (f) {
    case FamilyKind::gaussian: return std::normal_distribution<double>(mu, std::sqrt(phi))(gen);
    case FamilyKind::binomial: return std::bernoulli_distribution(mu)(gen) ? 1.0 : 0.0;
    case FamilyKind::poisson: return static_cast<double>(std::poisson_distribution<int>(mu)(gen));
    case FamilyKind::gamma: {
      const double k = 1.0 / phi;
      return std::gamma_distribution<double>(k, mu / k)(gen);
    }
    case FamilyKind::inverse_gaussian: {
      // Michael, Schucany and Haas.
      const double lambda = 1.0 / phi;
      const double v = std::normal_distribution<double>(0.0, 1.0)(gen);
      const double y = v * v;
      const double x = mu + mu * mu * y / (2.0 * lambda) -
                       mu / (2.0 * lambda) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
      return u <= mu / (mu + x) ? x : mu * mu / x;
    }
  }
  return mu;
}

// Dataset with an intercept and q uniform(-1, 1) covariates, responses simulated at beta.
inline Dataset simulate(const GlmModel& model, const Eigen::VectorXd& beta, double phi, int n,
                        std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const Eigen::Index p = beta.size();
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) X(i, j) = unif(gen);
    const double mu = model.link().linkinv(X.row(i).dot(beta));
    y(i) = draw_response(model.family().kind(), mu, phi, gen);
  }
  return hdprior::make_dataset(y, X);
}

// Typical mean used to place beta inside the link's domain.
inline double typical_mean(FamilyKind f) {
  switch (f) {
    case FamilyKind::gaussian: return 2.0;
    case FamilyKind::binomial: return 0.4;
    case FamilyKind::poisson: return 3.0;
    case FamilyKind::gamma: return 2.0;
    case FamilyKind::inverse_gaussian: return 1.5;
  }
  return 1.0;
}

}  // namespace testing_support

#include <string>
#include <vector>

#include "hdprior/priors.hpp"
#include "hdprior/target.hpp"

namespace testing_support {

inline hdprior::GlmModel model_for(FamilyKind f) {
  using hdprior::Family;
  using hdprior::Link;
  using hdprior::LinkKind;
  switch (f) {
    case FamilyKind::gaussian: return hdprior::GlmModel(Family(f), Link(LinkKind::identity));
    case FamilyKind::binomial: return hdprior::GlmModel(Family(f), Link(LinkKind::logit));
    default: return hdprior::GlmModel(Family(f), Link(LinkKind::log));
  }
}

// Current data plus two historical sets with an intercept and one covariate.
inline std::vector<Dataset> zoo_data(const GlmModel& model, std::uint64_t seed) {
  Eigen::VectorXd beta(2);
  beta << model.link().linkfun(typical_mean(model.family().kind())), 0.1;
  const double phi = model.samples_dispersion() ? 0.6 : 1.0;
  std::vector<Dataset> data;
  const int sizes[] = {25, 20, 30};
  for (int k = 0; k < 3; ++k) data.push_back(simulate(model, beta, phi, sizes[k], seed + k));
  return data;
}

// Synthetic smooth log normalizing constant curve with value 0 at a0 = 0.
inline hdprior::LogNCGrid synthetic_grid(double scale) {
  hdprior::LogNCGrid g;
  for (int i = 0; i <= 20; ++i) {
    const double a = i / 20.0;
    g.a0.push_back(a);
    g.lognc_raw.push_back(-scale * a + 0.3 * scale * a * a);
    g.lognc_smooth.push_back(g.lognc_raw.back());
    g.min_ess_bulk.push_back(1000.0);
    g.max_rhat.push_back(1.0);
  }
  return g;
}

struct NamedTarget {
  std::string name;
  hdprior::TargetPtr target;
};

inline std::vector<NamedTarget> target_zoo(const GlmModel& model, const std::vector<Dataset>& data) {
  using namespace hdprior;
  const std::span<const Dataset> all(data);
  std::vector<NamedTarget> out;
  out.push_back({"initial", build_target(InitialSpec{}, model, all.first(1)).primary});
  PPSpec pp;
  pp.a0 = Eigen::Vector2d(0.3, 0.7);
  out.push_back({"pp", build_target(pp, model, all).primary});
  NPPSpec npp;
  npp.a0_shape1 = 2.0;
  npp.a0_shape2 = 3.0;
  npp.grids = {synthetic_grid(20.0), synthetic_grid(30.0)};
  out.push_back({"npp", build_target(npp, model, all).primary});
  NAPPSpec napp;
  napp.a0_shape1 = 1.5;
  out.push_back({"napp", build_target(napp, model, all).primary});
  out.push_back({"bhm", build_target(BHMSpec{}, model, all).primary});
  out.push_back({"cp", build_target(CPSpec{}, model, all).primary});
  out.push_back({"leap", build_target(LEAPSpec{}, model, all).primary});
  LEAPSpec leap3;
  leap3.K = 3;
  leap3.prob_conc = Eigen::Vector3d(1.0, 2.0, 0.5);
  out.push_back({"leap3", build_target(leap3, model, all).primary});
  const TargetSet rmap = build_target(RMAPSpec{}, model, all);
  out.push_back({"rmap_informative", rmap.primary});
  out.push_back({"rmap_vague", rmap.vague});
  return out;
}

// Largest |analytic - finite difference| / max(1, |finite difference|) over coordinates.
inline double gradient_error(const hdprior::LogTarget& target, const Eigen::VectorXd& u) {
  Eigen::VectorXd g;
  target.log_density(u, &g);
  const Eigen::VectorXd fd = hdprior::finite_difference_gradient(target, u);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    worst = std::max(worst, std::abs(g(i) - fd(i)) / std::max(1.0, std::abs(fd(i))));
  }
  return worst;
}

}  // namespace testing_support

#include <algorithm>
#include <boost/math/distributions/normal.hpp>

namespace testing_support {

// Kolmogorov-Smirnov distance between a sample and the standard normal CDF.
inline double ks_normal(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const boost::math::normal_distribution<> n01;
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = boost::math::cdf(n01, x[i]);
    d = std::max({d, std::abs((i + 1) / n - f), std::abs(f - i / n)});
  }
  return d;
}

// Isotropic standard normal target.
inline hdprior::FunctionTarget std_normal_target(int dim) {
  return hdprior::FunctionTarget(dim, [](const Eigen::VectorXd& u, Eigen::VectorXd* g) {
    if (g) *g = -u;
    return -0.5 * u.squaredNorm();
  });
}

// Stationary AR(1) chains with unit marginal variance.
inline Eigen::MatrixXd ar1_chains(int n, int chains, double rho, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd x(n, chains);
  const double s = std::sqrt(1.0 - rho * rho);
  for (int c = 0; c < chains; ++c) {
    double v = nd(gen);
    for (int i = 0; i < n; ++i) {
      x(i, c) = v;
      v = rho * v + s * nd(gen);
    }
  }
  return x;
}

}  // namespace testing_support

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <functional>

namespace testing_support {

// log of the integral over beta of prod_k N(y_k | X_k beta, phi I)^w_k times
// N(beta | m0, diag(s0^2)), for known phi.
inline double conjugate_log_z(const std::vector<Dataset>& parts, const std::vector<double>& w,
                              double phi, const Eigen::VectorXd& m0, const Eigen::VectorXd& s0) {
  const Eigen::Index p = m0.size();
  Eigen::MatrixXd P = s0.array().square().inverse().matrix().asDiagonal();
  Eigen::VectorXd b = P * m0;
  double yy = 0.0, n_eff = 0.0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Eigen::VectorXd y = parts[k].y - parts[k].offset;
    P += w[k] / phi * parts[k].X.transpose() * parts[k].X;
    b += w[k] / phi * parts[k].X.transpose() * y;
    yy += w[k] / phi * y.squaredNorm();
    n_eff += w[k] * static_cast<double>(y.size());
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(P);
  const double log_det_p = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double log_det_s0 = 2.0 * s0.array().log().sum();
  const double quad = yy + m0.dot(s0.array().square().inverse().matrix().cwiseProduct(m0)) -
                      b.dot(llt.solve(b));
  (void)p;
  return -0.5 * n_eff * std::log(2.0 * M_PI * phi) - 0.5 * log_det_s0 - 0.5 * log_det_p - 0.5 * quad;
}

// Adaptive Gauss-Kronrod integral of exp(f) over [lo, hi], with f shifted by `shift`.
inline double log_integral_1d(const std::function<double(double)>& f, double lo, double hi,
                              double shift) {
  using boost::math::quadrature::gauss_kronrod;
  const double v = gauss_kronrod<double, 61>::integrate(
      [&](double x) { return std::exp(f(x) - shift); }, lo, hi, 20, 1e-12);
  return std::log(v) + shift;
}

// Nested adaptive quadrature over a rectangle.
inline double log_integral_2d(const std::function<double(double, double)>& f, double lo1, double hi1,
                              double lo2, double hi2, double shift) {
  using boost::math::quadrature::gauss_kronrod;
  const double v = gauss_kronrod<double, 31>::integrate(
      [&](double a) {
        return gauss_kronrod<double, 31>::integrate(
            [&](double b) { return std::exp(f(a, b) - shift); }, lo2, hi2, 15, 1e-11);
      },
      lo1, hi1, 15, 1e-11);
  return std::log(v) + shift;
}

}  // namespace testing_support
