// Acceptance suite: one PASS/FAIL/SKIP line per criterion.

#include <boost/math/distributions/binomial.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "hdprior/cli/dataset_io.hpp"
#include "hdprior/cli/formula.hpp"
#include "hdprior/evidence.hpp"
#include "hdprior/priors.hpp"
#include "hdprior/sampler.hpp"
#include "hdprior/survival.hpp"
#include "support.hpp"

using namespace hdprior;
using namespace testing_support;

namespace {

// Tolerances and budgets.
constexpr double kGradientTol = 1e-5;
constexpr double kEndpointTol = 1e-10;
constexpr double kMcseMultiple = 3.0;
constexpr double kConjugateEvidenceTol = 0.05;
constexpr double kQuadratureEvidenceTol = 0.02;
constexpr double kGridTol = 0.05;
constexpr double kSurvivalTol = 1e-8;
constexpr double kExponentialMleTol = 1e-10;
constexpr double kKsTol = 0.02;
constexpr double kMinEss = 10000.0;
constexpr double kRhatTol = 1.01;
constexpr double kAr1EssTol = 0.25;
constexpr double kBetaShapeTol = 0.01;
constexpr double kHalfRatioTol = 5e-4;
constexpr double kLogncTol = 0.5;
constexpr double kPosteriorSdFraction = 0.1;

enum class Status { pass, fail, skip };

struct Result {
  Status status = Status::pass;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      failed_ = true;
      if (!failures_.empty()) failures_ += "; ";
      failures_ += what;
    }
  }
  Result result(const std::string& detail) const {
    return failed_ ? Result{Status::fail, detail + " | failed: " + failures_} : Result{Status::pass, detail};
  }

 private:
  bool failed_ = false;
  std::string failures_;
};

std::string num(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

SamplerConfig config(std::uint64_t seed, int warmup = 1000, int sampling = 2500) {
  SamplerConfig c;
  c.seed = seed;
  c.iter_warmup = warmup;
  c.iter_sampling = sampling;
  return c;
}

Eigen::VectorXd random_point(int dim, std::mt19937_64& gen) {
  std::normal_distribution<double> nd(0.0, 0.5);
  Eigen::VectorXd u(dim);
  for (int i = 0; i < dim; ++i) u(i) = nd(gen);
  return u;
}

const FamilyKind kFamilies[] = {FamilyKind::gaussian, FamilyKind::binomial, FamilyKind::poisson, FamilyKind::gamma};

// iterations x chains matrix of an arbitrary per-draw series.
Eigen::MatrixXd by_chain(const Draws& d, const Eigen::VectorXd& series) {
  Eigen::MatrixXd m(d.iterations, d.chains);
  for (int c = 0; c < d.chains; ++c) m.col(c) = series.segment(static_cast<Eigen::Index>(c) * d.iterations, d.iterations);
  return m;
}

// Means and covariances of the first p outputs against a normal reference, each within
// kMcseMultiple Monte Carlo standard errors.
void check_normal_moments(Check& check, const Draws& d, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                          double& worst) {
  const Eigen::Index p = mean.size();
  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::MatrixXd m = by_chain(d, d.values.col(i));
    const double z = std::abs(m.mean() - mean(i)) / mcse_mean(m);
    worst = std::max(worst, z);
    check.require(z <= kMcseMultiple, "mean " + d.names[static_cast<std::size_t>(i)] + " off by " + num(z) + " MCSE");
    for (Eigen::Index j = 0; j <= i; ++j) {
      const Eigen::VectorXd prod =
          (d.values.col(i).array() - mean(i)) * (d.values.col(j).array() - mean(j));
      const Eigen::MatrixXd pm = by_chain(d, prod);
      const double zc = std::abs(pm.mean() - cov(i, j)) / mcse_mean(pm);
      worst = std::max(worst, zc);
      check.require(zc <= kMcseMultiple,
                    "cov(" + std::to_string(i) + "," + std::to_string(j) + ") off by " + num(zc) + " MCSE");
    }
  }
}

Result gradient_suite() {
  Check check;
  double worst = 0.0;
  int count = 0;
  for (FamilyKind f : kFamilies) {
    const GlmModel model = model_for(f);
    const auto data = zoo_data(model, 101);
    std::mt19937_64 gen(102);
    for (const auto& [name, target] : target_zoo(model, data)) {
      for (int rep = 0; rep < 20; ++rep) {
        const Eigen::VectorXd u = random_point(target->dim(), gen);
        const double err = gradient_error(*target, u);
        worst = std::max(worst, std::isfinite(err) ? err : INFINITY);
        ++count;
        check.require(err <= kGradientTol, std::string(Family(f).name()) + "/" + name + " error " + num(err));
      }
    }
  }
  return check.result(std::to_string(count) + " points, worst relative error " + num(worst));
}

Result endpoint_reductions() {
  Check check;
  double worst = 0.0;
  for (FamilyKind f : kFamilies) {
    const GlmModel model = model_for(f);
    const auto data = zoo_data(model, 201);
    const std::span<const Dataset> all(data);
    PPSpec zero, one;
    zero.a0 = Eigen::VectorXd::Zero(2);
    one.a0 = Eigen::VectorXd::Ones(2);
    const auto pp0 = build_target(zero, model, all).primary;
    const auto pp1 = build_target(one, model, all).primary;
    const auto init = build_target(InitialSpec{}, model, all.first(1)).primary;
    const Dataset pooled = stack_datasets(all);
    const auto pooled_init = build_target(InitialSpec{}, model, std::span<const Dataset>(&pooled, 1)).primary;
    std::mt19937_64 gen(202);
    for (int rep = 0; rep < 50; ++rep) {
      const Eigen::VectorXd u = random_point(init->dim(), gen);
      const double d0 = std::abs(pp0->log_density(u, nullptr) - init->log_density(u, nullptr));
      const double d1 = std::abs(pp1->log_density(u, nullptr) - pooled_init->log_density(u, nullptr));
      worst = std::max({worst, d0, d1});
      check.require(d0 <= kEndpointTol && d1 <= kEndpointTol, std::string(Family(f).name()) + " endpoint mismatch");
    }
  }
  return check.result("200 points per endpoint, worst |difference| " + num(worst));
}

Result conjugate_oracle() {
  Check check;
  const GlmModel model(Family(FamilyKind::gaussian), Link(LinkKind::identity), 1.0);
  Eigen::VectorXd beta(3);
  beta << 0.5, -1.0, 2.0;
  const Dataset cur = simulate(model, beta, 1.0, 50, 301);
  const Dataset hist = simulate(model, beta, 1.0, 40, 302);
  const std::vector<Dataset> data = {cur, hist};
  const double a0 = 0.5;
  const Eigen::VectorXd m0 = Eigen::VectorXd::Zero(3), s0 = Eigen::VectorXd::Constant(3, 10.0);

  const Eigen::MatrixXd prec =
      cur.X.transpose() * cur.X + a0 * hist.X.transpose() * hist.X + Eigen::MatrixXd::Identity(3, 3) / 100.0;
  const Eigen::MatrixXd cov = prec.inverse();
  const Eigen::VectorXd mean = cov * (cur.X.transpose() * cur.y + a0 * hist.X.transpose() * hist.y);

  PPSpec pp;
  pp.a0 = Eigen::VectorXd::Constant(1, a0);
  const Draws d = sample(*build_target(pp, model, data).primary, config(303));
  check.require(d.rows() == 10000, "expected 10000 draws");
  double worst = 0.0;
  check_normal_moments(check, d, mean, cov, worst);

  const double exact = conjugate_log_z({cur, hist}, {1.0, a0}, 1.0, m0, s0) - conjugate_log_z({hist}, {a0}, 1.0, m0, s0);
  const EvidenceResult e = marginal_likelihood(pp, model, data, config(304));
  const double err = std::abs(e.log_evidence - exact);
  check.require(err <= kConjugateEvidenceTol, "evidence error " + num(err));
  return check.result("worst moment deviation " + num(worst) + " MCSE, evidence error " + num(err));
}

// Bernoulli-logit log-likelihood written out directly.
double logistic_loglik(const Dataset& d, double b0, double b1) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const double eta = b0 + b1 * d.X(i, 1);
    total += d.y(i) * eta - (eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)));
  }
  return total;
}

// log of the integral of exp(w_cur loglik(cur) + w_hist loglik(hist)) N(b | 0, 100 I) by quadrature.
double logistic_log_z(const Dataset& cur, double w_cur, const Dataset& hist, double w_hist) {
  const auto f = [&](double b0, double b1) {
    return w_cur * logistic_loglik(cur, b0, b1) + w_hist * logistic_loglik(hist, b0, b1) -
           (b0 * b0 + b1 * b1) / 200.0 - 2.0 * std::log(10.0) - std::log(2.0 * M_PI);
  };
  // Newton steps for the mode, then a box of 10 curvature sds around it.
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  Eigen::Matrix2d H;
  for (int it = 0; it < 100; ++it) {
    Eigen::Vector2d g = -b / 100.0;
    H = -Eigen::Matrix2d::Identity() / 100.0;
    for (const auto& [d, w] : {std::pair<const Dataset&, double>(cur, w_cur), std::pair<const Dataset&, double>(hist, w_hist)}) {
      for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const Eigen::Vector2d x(1.0, d.X(i, 1));
        const double p = 1.0 / (1.0 + std::exp(-x.dot(b)));
        g += w * (d.y(i) - p) * x;
        H -= w * p * (1.0 - p) * x * x.transpose();
      }
    }
    const Eigen::Vector2d step = H.ldlt().solve(g);
    b -= step;
    if (step.norm() < 1e-12) break;
  }
  const Eigen::Matrix2d cov = (-H).inverse();
  const double r0 = 10.0 * std::sqrt(cov(0, 0)), r1 = 10.0 * std::sqrt(cov(1, 1));
  return log_integral_2d(f, b(0) - r0, b(0) + r0, b(1) - r1, b(1) + r1, f(b(0), b(1)));
}

Result quadrature_oracle() {
  Check check;
  const GlmModel model = model_for(FamilyKind::binomial);
  Eigen::VectorXd beta(2);
  beta << 0.3, 1.0;
  const Dataset cur = simulate(model, beta, 1.0, 30, 401);
  const Dataset hist = simulate(model, beta, 1.0, 30, 402);
  const std::vector<Dataset> data = {cur, hist};
  double worst = 0.0;

  const double exact_init = logistic_log_z(cur, 1.0, hist, 0.0);
  const EvidenceResult ei = marginal_likelihood(InitialSpec{}, model, std::span<const Dataset>(data).first(1), config(403));
  const double err_init = std::abs(ei.log_evidence - exact_init);
  worst = err_init;
  check.require(err_init <= kQuadratureEvidenceTol, "initial prior error " + num(err_init));

  std::uint64_t seed = 404;
  for (double a0 : {0.25, 0.5, 1.0}) {
    PPSpec pp;
    pp.a0 = Eigen::VectorXd::Constant(1, a0);
    const double exact = logistic_log_z(cur, 1.0, hist, a0) - logistic_log_z(cur, 0.0, hist, a0);
    const EvidenceResult e = marginal_likelihood(pp, model, data, config(seed++));
    const double err = std::abs(e.log_evidence - exact);
    worst = std::max(worst, err);
    check.require(err <= kQuadratureEvidenceTol, "power prior a0 = " + num(a0) + " error " + num(err));
  }
  return check.result("worst |bridge - quadrature| " + num(worst));
}

Result npp_grid() {
  Check check;
  const GlmModel model(Family(FamilyKind::gaussian), Link(LinkKind::identity), 1.0);
  Eigen::VectorXd beta(2);
  beta << 1.0, -0.5;
  const Dataset hist = simulate(model, beta, 1.0, 40, 501);
  const auto grids = build_lognc_grid(model, std::span<const Dataset>(&hist, 1), default_a0_grid(21), config(502));
  const LogNCGrid& g = grids.front();
  check.require(g.a0.size() == 21, "grid size");
  check.require(g.lognc_smooth.front() == 0.0 && g.lognc_raw.front() == 0.0, "lognc(0) is not exactly 0");
  double worst = 0.0, worst_raw = 0.0;
  const Eigen::VectorXd m0 = Eigen::VectorXd::Zero(2), s0 = Eigen::VectorXd::Constant(2, 10.0);
  for (std::size_t i = 0; i < g.a0.size(); ++i) {
    const double exact = g.a0[i] == 0.0 ? 0.0 : conjugate_log_z({hist}, {g.a0[i]}, 1.0, m0, s0);
    const double err = std::abs(g.lognc_smooth[i] - exact);
    worst = std::max(worst, err);
    worst_raw = std::max(worst_raw, std::abs(g.lognc_raw[i] - exact));
    check.require(err <= kGridTol, "a0 = " + num(g.a0[i]) + " error " + num(err));
  }
  return check.result("worst smoothed error " + num(worst) + " (raw " + num(worst_raw) + ")");
}

Result napp_exactness() {
  Check check;
  const GlmModel model(Family(FamilyKind::gaussian), Link(LinkKind::identity), 0.8);
  Eigen::VectorXd beta(3);
  beta << -0.2, 0.7, 1.5;
  const Dataset cur = simulate(model, beta, 0.8, 40, 601);
  const Dataset hist = simulate(model, beta, 0.8, 60, 602);
  const double a0 = 0.4, phi = 0.8;
  const Eigen::VectorXd hat0 = hist.X.colPivHouseholderQr().solve(hist.y);
  const Eigen::MatrixXd info0 = hist.X.transpose() * hist.X / phi;
  const Eigen::MatrixXd prec = cur.X.transpose() * cur.X / phi + a0 * info0;
  const Eigen::MatrixXd cov = prec.inverse();
  const Eigen::VectorXd mean = cov * (cur.X.transpose() * cur.y / phi + a0 * info0 * hat0);

  NAPPSpec spec;
  spec.fixed_a0 = Eigen::VectorXd::Constant(1, a0);
  const std::vector<Dataset> data = {cur, hist};
  const Draws d = sample(*build_target(spec, model, data).primary, config(603));
  double worst = 0.0;
  check_normal_moments(check, d, mean, cov, worst);
  return check.result("worst moment deviation " + num(worst) + " MCSE");
}

Result rmap_mixing() {
  Check check;
  check.require(rmap_weight(0.0, 3.0, -2.0) == 0.0, "w = 0");
  check.require(rmap_weight(1.0, 3.0, -2.0) == 1.0, "w = 1");
  check.require(std::abs(rmap_weight(0.3, 1.7, 1.7) - 0.3) <= 1e-15, "equal evidence keeps w");
  check.require(std::abs(rmap_weight(0.5, 1.0, 0.0) - 1.0 / (1.0 + std::exp(-1.0))) <= 1e-15, "midpoint");
  check.require(std::abs(rmap_weight(0.25, 0.4, -0.9) + rmap_weight(0.75, -0.9, 0.4) - 1.0) <= 1e-15, "symmetry");

  const GlmModel model = model_for(FamilyKind::binomial);
  const auto zoo = zoo_data(model, 701);
  const std::vector<Dataset> data = {zoo[0], zoo[1]};
  RMAPSpec spec;
  spec.w = 0.02;  // puts the updated weight near one half for these data
  const RmapResult r = rmap_posterior(model, data, spec, config(702));
  const auto n = static_cast<double>(r.draws.rows());
  check.require(r.draws.rows() == 10000, "expected 10000 mixed draws");
  const boost::math::binomial_distribution<> bin(n, r.gamma_tilde);
  const double lo = boost::math::quantile(bin, 0.005);
  const double hi = boost::math::quantile(boost::math::complement(bin, 0.005));
  check.require(r.informative_picks >= lo && r.informative_picks <= hi,
                "picks " + std::to_string(r.informative_picks) + " outside [" + num(lo, 6) + ", " + num(hi, 6) + "]");
  // Every mixed draw is the same-index draw of the component it came from.
  int from_informative = 0;
  std::vector<int> cols;
  for (const auto& name : r.draws.names) cols.push_back(r.informative.column(name));
  for (Eigen::Index m = 0; m < r.draws.rows(); ++m) {
    bool inf = true;
    for (std::size_t j = 0; j < cols.size(); ++j) inf = inf && r.draws.values(m, static_cast<Eigen::Index>(j)) == r.informative.values(m, cols[j]);
    const bool vag = r.draws.values.row(m) == r.vague.values.row(m);
    check.require(inf || vag, "draw " + std::to_string(m) + " belongs to neither component");
    from_informative += inf && !vag ? 1 : 0;
  }
  check.require(from_informative == r.informative_picks, "pick count does not match the draws");
  return check.result("gamma~ = " + num(r.gamma_tilde, 4) + ", picks " + std::to_string(r.informative_picks) +
                      " in [" + num(lo, 6) + ", " + num(hi, 6) + "]");
}

Result survival_equivalence() {
  Check check;
  std::mt19937_64 gen(801);
  std::exponential_distribution<double> ex(0.8);
  std::bernoulli_distribution ev(0.7);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<SurvivalRecord> recs;
  for (int i = 0; i < 60; ++i) {
    SurvivalRecord r;
    r.time = ex(gen) + 1e-3;
    r.event = ev(gen) ? 1 : 0;
    r.x = Eigen::Vector2d(nd(gen), nd(gen));
    recs.push_back(r);
  }
  const std::vector<double> cuts = {0.0, 0.5, 1.2};
  const SurvivalExpansion e = expand_poisson(recs, Breaks(cuts));
  const GlmModel pois(Family(FamilyKind::poisson), Link(LinkKind::log));
  // Direct piecewise-exponential log-likelihood: hazard^event * survivor.
  auto direct = [&](const Eigen::VectorXd& ll, const Eigen::VectorXd& b) {
    double total = 0.0;
    for (const auto& r : recs) {
      const double lin = r.x.dot(b);
      for (int j = 0; j < 3; ++j) {
        const double hi = j + 1 < 3 ? cuts[static_cast<std::size_t>(j) + 1] : INFINITY;
        const double risk = std::max(0.0, std::min(r.time, hi) - cuts[static_cast<std::size_t>(j)]);
        total -= std::exp(ll(j) + lin) * risk;
        if (r.event && r.time > cuts[static_cast<std::size_t>(j)] && r.time <= hi) total += ll(j) + lin;
      }
    }
    return total;
  };
  std::normal_distribution<double> small(0.0, 0.5);
  double ref = 0.0, worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd ll(3), b(2), theta(5);
    for (int j = 0; j < 3; ++j) ll(j) = small(gen);
    for (int j = 0; j < 2; ++j) b(j) = small(gen);
    theta << ll, b;
    const double diff = log_likelihood(pois, theta, 1.0, e.data) - direct(ll, b);
    if (rep == 0) ref = diff;
    worst = std::max(worst, std::abs(diff - ref));
  }
  check.require(worst <= kSurvivalTol, "difference varies by " + num(worst));

  std::vector<SurvivalRecord> plain = recs;
  for (auto& r : plain) r.x.resize(0);
  const SurvivalExpansion one = expand_poisson(plain, Breaks({0.0}));
  const MleFit fit = fit_mle(pois, one.data);
  double events = 0.0, exposure = 0.0;
  for (const auto& r : plain) {
    events += r.event;
    exposure += r.time;
  }
  const double rel = std::abs(std::exp(fit.beta_hat(0)) / (events / exposure) - 1.0);
  check.require(rel <= kExponentialMleTol, "exponential MLE relative error " + num(rel));
  return check.result("difference spread " + num(worst) + ", exponential MLE relative error " + num(rel));
}

Result sampler_calibration() {
  Check check;
  const auto target = std_normal_target(5);
  const Draws d = sample(target, config(901, 1000, 5000));
  const Diagnostics diag = diagnostics(d);
  check.require(diag.max_rhat() < kRhatTol, "R-hat " + num(diag.max_rhat(), 4));
  double worst_ks = 0.0, min_ess = INFINITY;
  for (int j = 0; j < 5; ++j) {
    const Eigen::MatrixXd m = d.chain_matrix(j);
    const double ess = ess_bulk(m);
    min_ess = std::min(min_ess, ess);
    const Eigen::VectorXd col = d.values.col(j);
    const double ks = ks_normal(std::vector<double>(col.data(), col.data() + col.size()));
    worst_ks = std::max(worst_ks, ks);
    check.require(ks < kKsTol, "KS " + num(ks) + " on coordinate " + std::to_string(j));
  }
  check.require(min_ess >= kMinEss, "ESS " + num(min_ess, 6) + " below " + num(kMinEss, 6));

  const double rho = 0.9;
  const Eigen::MatrixXd ar = ar1_chains(25000, 4, rho, 902);
  const double expected = static_cast<double>(ar.size()) * (1.0 - rho) / (1.0 + rho);
  const double rel = std::abs(ess_basic(ar) / expected - 1.0);
  check.require(rel <= kAr1EssTol, "AR(1) ESS off by " + num(100 * rel) + "%");
  return check.result("max KS " + num(worst_ks) + ", min ESS " + num(min_ess, 6) + ", R-hat " +
                      num(diag.max_rhat(), 4) + ", AR(1) ESS error " + num(100 * rel) + "%");
}

Result elicitation() {
  Check check;
  const auto [a, b] = solve_beta_hyper(0.1113, 1.0);
  check.require(std::abs(a - 0.77) <= kBetaShapeTol, "alpha " + num(a, 4));
  check.require(std::abs(b - 6.21) <= kBetaShapeTol, "beta " + num(b, 4));
  const double half = a0_half_ratio(183, 822);
  check.require(std::abs(half - 0.111) <= kHalfRatioTol, "a0 " + num(half, 4));
  return check.result("shapes (" + num(a, 4) + ", " + num(b, 4) + "), a0 " + num(half, 4));
}

// Published posterior summaries, (mean, sd) per row.
struct Published {
  const char* name;
  std::vector<std::pair<double, double>> rows;
};

Result actg_conditional() {
  const char* dir = std::getenv("HDPRIOR_ACTG_DIR");
  if (!dir) return {Status::skip, "set HDPRIOR_ACTG_DIR to a directory with actg019.csv and actg036.csv"};
  const std::filesystem::path root(dir);
  const auto current = root / "actg036.csv", historical = root / "actg019.csv";
  if (!std::filesystem::exists(current) || !std::filesystem::exists(historical)) {
    return {Status::skip, "actg019.csv or actg036.csv not found in " + root.string()};
  }
  Check check;
  const cli::Formula formula = cli::parse_formula("outcome ~ age + race + treatment + cd4");
  auto data = cli::load_datasets({current.string(), historical.string()}, formula);
  cli::standardize(data);
  check.require(data[0].rows() == 183 && data[1].rows() == 822, "unexpected sample sizes");
  const GlmModel model = model_for(FamilyKind::binomial);
  const std::span<const Dataset> all(data);
  const Dataset& hist = data[1];
  std::uint64_t seed = 1100;
  std::ostringstream notes;
  // Progress goes to stderr; this criterion runs for a long time.
  const auto started = std::chrono::steady_clock::now();
  auto progress = [&](const char* what) {
    const std::chrono::duration<double> t = std::chrono::steady_clock::now() - started;
    std::cerr << "  [11] " << what << " done at " << num(t.count(), 4) << " s" << std::endl;
  };

  // Normalizing constants with doubled warmup and sampling.
  const std::vector<double> grid = default_a0_grid(21);
  const LogNCGrid g =
      build_lognc_grid(model, std::span<const Dataset>(&hist, 1), grid, config(seed++, 2000, 5000)).front();
  const std::pair<double, double> listed[] = {{0.05, -19.658}, {0.10, -30.372}, {0.15, -40.382}, {0.20, -50.115}, {0.25, -59.686}};
  double worst_lognc = 0.0;
  for (const auto& [a0, value] : listed) {
    const auto i = static_cast<std::size_t>(std::lround(a0 * 20.0));
    const double err = std::abs(g.lognc_raw[i] - value);
    worst_lognc = std::max(worst_lognc, err);
    check.require(err <= kLogncTol, "lognc at a0 = " + num(a0) + " off by " + num(err));
  }
  notes << "lognc error " << num(worst_lognc);
  progress("lognc grid");

  auto compare = [&](const Published& pub, const Draws& d, const std::vector<std::string>& names) {
    const auto rows = summarize(d);
    double worst = 0.0;
    for (std::size_t k = 0; k < names.size(); ++k) {
      const int c = d.column(names[k]);
      const double mean = rows[static_cast<std::size_t>(c)].mean;
      const double z = std::abs(mean - pub.rows[k].first) / pub.rows[k].second;
      worst = std::max(worst, z);
      check.require(z <= kPosteriorSdFraction, std::string(pub.name) + " " + names[k] + " off by " + num(z) + " sd");
    }
    notes << ", " << pub.name << " " << num(worst) << " sd";
    progress(pub.name);
  };
  const auto& cols = data[0].column_names;
  auto with_suffix = [&](const std::string& suffix) {
    std::vector<std::string> out;
    for (const auto& c : cols) out.push_back(c + suffix);
    return out;
  };
  auto concat = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  BHMSpec bhm;
  bhm.h.meta_sd_sd = Eigen::VectorXd::Constant(5, 0.5);
  compare({"BHM", {{-4.130, 0.906}, {0.262, 0.261}, {1.012, 0.903}, {-0.644, 0.430}, {-1.247, 0.369},
                   {-3.917, 0.828}, {0.456, 0.185}, {1.383, 0.826}, {-0.706, 0.291}, {-0.776, 0.164}}},
          sample(*build_target(bhm, model, all).primary, config(seed++)), concat(cols, with_suffix("_hist_1")));

  compare({"CP", {{-4.197, 0.902}, {0.223, 0.276}, {0.980, 0.892}, {-0.605, 0.472}, {-1.326, 0.345},
                  {-3.944, 0.827}, {0.476, 0.185}, {1.403, 0.822}, {-0.706, 0.294}, {-0.765, 0.162}}},
          sample(*build_target(CPSpec{}, model, all).primary, config(seed++)), concat(cols, with_suffix("_hist")));

  RMAPSpec rmap;
  rmap.w = 0.1;
  compare({"RMAP", {{-4.283, 0.995}, {0.236, 0.286}, {0.847, 0.979}, {-0.540, 0.527}, {-1.472, 0.438}}},
          rmap_posterior(model, all, rmap, config(seed++)).draws, cols);

  PPSpec pp;
  pp.a0 = Eigen::VectorXd::Constant(1, a0_half_ratio(183, 822));
  compare({"PP", {{-3.875, 1.240}, {0.249, 0.281}, {0.718, 1.223}, {-0.482, 0.564}, {-1.280, 0.326}}},
          sample(*build_target(pp, model, all).primary, config(seed++)), cols);

  const auto [s1, s2] = solve_beta_hyper(a0_half_ratio(183, 822), 1.0);
  NPPSpec npp;
  npp.a0_shape1 = s1;
  npp.a0_shape2 = s2;
  npp.grids = {g};
  compare({"NPP", {{-3.836, 1.179}, {0.278, 0.265}, {0.802, 1.170}, {-0.539, 0.534}, {-1.193, 0.339}, {0.187, 0.115}}},
          sample(*build_target(npp, model, all).primary, config(seed++)), concat(cols, {"a0_hist_1"}));

  NAPPSpec napp;
  napp.a0_shape1 = s1;
  napp.a0_shape2 = s2;
  compare({"NAPP", {{-3.644, 1.173}, {0.302, 0.252}, {0.729, 1.167}, {-0.543, 0.503}, {-1.113, 0.322}, {0.188, 0.128}}},
          sample(*build_target(napp, model, all).primary, config(seed++)), concat(cols, {"a0_hist_1"}));

  compare({"LEAP", {{-4.206, 1.025}, {0.300, 0.183}, {1.154, 1.021}, {-0.668, 0.425}, {-0.941, 0.256}, {0.948, 0.059}}},
          sample(*build_target(LEAPSpec{}, model, all).primary, config(seed++)), concat(cols, {"gamma_1"}));

  // Logit against probit under the power prior.
  const GlmModel probit(Family(FamilyKind::binomial), Link(LinkKind::probit));
  double min_bf = INFINITY, max_bf = -INFINITY;
  for (int k = 1; k <= 10; ++k) {
    PPSpec s;
    s.a0 = Eigen::VectorXd::Constant(1, 0.1 * k);
    const double lbf = marginal_likelihood(s, model, all, config(seed++)).log_evidence -
                       marginal_likelihood(s, probit, all, config(seed++)).log_evidence;
    min_bf = std::min(min_bf, lbf);
    max_bf = std::max(max_bf, lbf);
    check.require(lbf > 0.0, "log BF at a0 = " + num(0.1 * k) + " is " + num(lbf));
    check.require(lbf < std::log(3.0), "log BF at a0 = " + num(0.1 * k) + " reaches log 3");
  }
  progress("Bayes factors");
  notes << ", log BF in [" << num(min_bf) << ", " << num(max_bf) << "]";
  return check.result(notes.str());
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Result()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "gradient suite", 60, gradient_suite},
      {2, "a0 endpoint reductions", 10, endpoint_reductions},
      {3, "conjugate oracle", 120, conjugate_oracle},
      {4, "quadrature oracle", 180, quadrature_oracle},
      {5, "NPP grid", 600, npp_grid},
      {6, "NAPP exactness", 60, napp_exactness},
      {7, "RMAP weight and mixing", 300, rmap_mixing},
      {8, "survival equivalence", 10, survival_equivalence},
      {9, "sampler calibration", 120, sampler_calibration},
      {10, "elicitation helpers", 1, elicitation},
      {11, "ACTG analysis", 3600, actg_conditional},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.status == Status::pass && secs > c.budget_seconds) {
      r = {Status::fail, r.detail + " | over the " + num(c.budget_seconds) + " s budget"};
    }
    const char* label = r.status == Status::pass ? "PASS" : r.status == Status::fail ? "FAIL" : "SKIP";
    if (r.status == Status::fail) ++failures;
    std::printf("%s %2d %s: %s (%.1f s)\n", label, c.id, c.name, r.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
