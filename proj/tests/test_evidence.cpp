#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hdprior/evidence.hpp"
#include "hdprior/priors.hpp"
#include "hdprior/sampler.hpp"
#include "support.hpp"

using namespace hdprior;
using namespace testing_support;

namespace {

SamplerConfig quick_config(std::uint64_t seed) {
  SamplerConfig c;
  c.seed = seed;
  c.iter_warmup = 500;
  c.iter_sampling = 1000;
  return c;
}

double bridge_of(const LogTarget& t, std::uint64_t seed) {
  const Draws d = sample(t, quick_config(seed));
  const BridgeResult r = bridge_sample(d, t);
  CHECK(r.converged);
  CHECK(r.rel_change <= 1e-10);
  return r.log_evidence;
}

Dataset binomial_intercept_data() {
  Eigen::VectorXd y(20);
  y << 1, 0, 0, 1, 1, 0, 1, 1, 1, 0, 1, 1, 0, 1, 1, 1, 0, 1, 1, 1;
  return make_dataset(y, Eigen::MatrixXd::Ones(20, 1));
}

// Quadrature value of log int L(beta)^a N(beta | 0, 100) d beta for the intercept model.
double binomial_intercept_log_z(const Dataset& d, double a) {
  const GlmModel model = model_for(FamilyKind::binomial);
  const auto f = [&](double b) {
    const Eigen::VectorXd beta = Eigen::VectorXd::Constant(1, b);
    return a * log_likelihood(model, beta, 1.0, d) - 0.5 * b * b / 100.0 -
           std::log(10.0 * std::sqrt(2.0 * M_PI));
  };
  const double mode = std::log(d.y.mean() / (1.0 - d.y.mean()));
  return log_integral_1d(f, mode - 12.0, mode + 12.0, f(mode));
}

}  // namespace

TEST_CASE("bridge sampling of known constants") {
  FunctionTarget kernel(1, [](const Eigen::VectorXd& u, Eigen::VectorXd* g) {
    if (g) *g = -u;
    return -0.5 * u.squaredNorm();
  });
  CHECK(std::abs(bridge_of(kernel, 1) - 0.5 * std::log(2.0 * M_PI)) <= 0.01);

  Eigen::Matrix2d S;
  S << 2.0, 1.2, 1.2, 1.5;
  const Eigen::Matrix2d Sinv = S.inverse();
  FunctionTarget corr(2, [Sinv](const Eigen::VectorXd& u, Eigen::VectorXd* g) {
    const Eigen::Vector2d v = u - Eigen::Vector2d(1.0, -2.0);
    if (g) *g = -Sinv * v;
    return -0.5 * v.dot(Sinv * v) + 3.0;
  });
  const double expected = 3.0 + std::log(2.0 * M_PI) + 0.5 * std::log(S.determinant());
  CHECK(std::abs(bridge_of(corr, 2) - expected) <= 0.01);

  FunctionTarget normalized(3, [](const Eigen::VectorXd& u, Eigen::VectorXd* g) {
    if (g) *g = -u;
    return -0.5 * u.squaredNorm() - 3.0 * 0.5 * std::log(2.0 * M_PI);
  });
  CHECK(std::abs(bridge_of(normalized, 3)) <= 0.01);
}

TEST_CASE("bridge sampling is invariant to affine reparameterization") {
  const GlmModel model = model_for(FamilyKind::binomial);
  Eigen::VectorXd beta(2);
  beta << -0.3, 0.8;
  const Dataset d = simulate(model, beta, 1.0, 40, 4);
  const auto base = build_target(InitialSpec{}, model, std::span<const Dataset>(&d, 1)).primary;
  Eigen::Matrix2d A;
  A << 0.5, 0.3, -0.2, 2.0;
  const Eigen::Vector2d shift(1.0, -0.5);
  const double log_det = std::log(std::abs(A.determinant()));
  FunctionTarget moved(2, [&](const Eigen::VectorXd& v, Eigen::VectorXd* g) {
    Eigen::VectorXd inner;
    const double val = base->log_density(A * v + shift, g ? &inner : nullptr);
    if (g) *g = A.transpose() * inner;
    return val + log_det;
  });
  CHECK(std::abs(bridge_of(*base, 5) - bridge_of(moved, 6)) <= 0.02);
}

TEST_CASE("npp_lognc against exact values") {
  const GlmModel model = model_for(FamilyKind::binomial);
  const Dataset d = binomial_intercept_data();
  const LogNCPoint zero = npp_lognc(model, d, 0.0, quick_config(1));
  CHECK(zero.lognc == 0.0);
  CHECK(std::isnan(zero.min_ess_bulk));
  for (double a : {0.3, 1.0}) {
    const LogNCPoint pt = npp_lognc(model, d, a, quick_config(2));
    INFO("a0 = ", a);
    CHECK(std::abs(pt.lognc - binomial_intercept_log_z(d, a)) <= 0.02);
    CHECK(pt.max_rhat < 1.05);
  }
  CHECK_THROWS(npp_lognc(model, d, 1.5, quick_config(1)));

  // Gaussian with known dispersion and a conjugate normal initial prior.
  const GlmModel gauss(Family(FamilyKind::gaussian), Link(LinkKind::identity), 1.0);
  Eigen::VectorXd b(2);
  b << 1.0, -0.5;
  const Dataset g = simulate(gauss, b, 1.0, 40, 8);
  const LogNCPoint pg = npp_lognc(gauss, g, 0.5, quick_config(3));
  const double exact = conjugate_log_z({g}, {0.5}, 1.0, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, 10.0));
  CHECK(std::abs(pg.lognc - exact) <= 0.05);
}

TEST_CASE("lognc smoothing") {
  const auto grid = default_a0_grid();
  REQUIRE(grid.size() == 21);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  std::vector<double> raw;
  for (double a : grid) raw.push_back(-7.5 * a);
  const LogNCGrid s = smooth_lognc(grid, raw, {});
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(s.lognc_smooth[i] == doctest::Approx(raw[i]).epsilon(1e-9));
  CHECK(s.lognc_smooth[0] == 0.0);

  // Noisy curve still pinned at zero.
  std::vector<double> noisy;
  for (std::size_t i = 0; i < grid.size(); ++i) noisy.push_back(-20.0 * std::sqrt(grid[i]) + (i % 2 ? 0.01 : -0.01));
  noisy[0] = 0.0;
  CHECK(smooth_lognc(grid, noisy, {}).lognc_smooth[0] == 0.0);

  CHECK_THROWS(smooth_lognc({0.0, 0.5, 1.0}, {0.0, -1.0, -2.0}, {}));
  CHECK_THROWS(smooth_lognc({0.1, 0.2, 0.3, 0.4, 1.0}, {0.0, -1.0, -2.0, -3.0, -4.0}, {}));
  CHECK_THROWS(smooth_lognc({0.0, 0.2, 0.2, 0.4, 1.0}, {0.0, -1.0, -2.0, -3.0, -4.0}, {}));
}

TEST_CASE("lognc grid csv round trip") {
  LogNCGrid g = synthetic_grid(12.0);
  g.min_ess_bulk[0] = std::nan("");
  g.max_rhat[0] = std::nan("");
  std::stringstream ss;
  write_lognc_csv(ss, g);
  CHECK(ss.str().rfind("a0,lognc_raw,lognc_smooth,min_ess_bulk,max_rhat", 0) == 0);
  const LogNCGrid back = read_lognc_csv(ss);
  REQUIRE(back.a0.size() == g.a0.size());
  for (std::size_t i = 0; i < g.a0.size(); ++i) {
    CHECK(back.a0[i] == g.a0[i]);
    CHECK(back.lognc_smooth[i] == g.lognc_smooth[i]);
  }
  CHECK(std::isnan(back.max_rhat[0]));
  std::stringstream bad("a0,lognc_raw\n0,0\n");
  CHECK_THROWS(read_lognc_csv(bad));
}

TEST_CASE("rmap weight") {
  CHECK(rmap_weight(0.0, 3.0, -2.0) == 0.0);
  CHECK(rmap_weight(1.0, 3.0, -2.0) == 1.0);
  CHECK(rmap_weight(0.5, 1.7, 1.7) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rmap_weight(0.1, std::log(9.0), 0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(rmap_weight(0.3, -1000.0, -1001.0) == doctest::Approx(0.3 * std::exp(1.0) / (0.3 * std::exp(1.0) + 0.7)).epsilon(1e-12));
  double prev = 0.0;
  for (int i = 1; i < 100; ++i) {
    const double v = rmap_weight(i / 100.0, -3.0, -1.0);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS(rmap_weight(1.1, 0.0, 0.0));
}

TEST_CASE("rmap endpoints reuse single-component draws") {
  const GlmModel model = model_for(FamilyKind::binomial);
  const auto data = zoo_data(model, 70);
  const std::span<const Dataset> all(data);
  SamplerConfig cfg = quick_config(11);
  cfg.iter_sampling = 500;
  RMAPSpec one;
  one.w = 1.0;
  const RmapResult r1 = rmap_posterior(model, all, one, cfg);
  CHECK(r1.gamma_tilde == 1.0);
  CHECK(r1.informative_picks == r1.draws.rows());
  const int col = r1.informative.column("x2");
  CHECK(r1.draws.values.col(r1.draws.column("x2")) == r1.informative.values.col(col));

  RMAPSpec zero;
  zero.w = 0.0;
  const RmapResult r0 = rmap_posterior(model, all, zero, cfg);
  CHECK(r0.informative_picks == 0);
  CHECK(r0.draws.values == r0.vague.values);
  CHECK(r0.draws.names == r0.vague.names);
}

TEST_CASE("marginal likelihood against quadrature") {
  const GlmModel model = model_for(FamilyKind::binomial);
  const Dataset d = binomial_intercept_data();
  const EvidenceResult r = marginal_likelihood(InitialSpec{}, model, std::span<const Dataset>(&d, 1), quick_config(21));
  CHECK_FALSE(r.prior_sampled);
  CHECK(r.log_prior_constant == 0.0);
  CHECK(std::abs(r.log_evidence - binomial_intercept_log_z(d, 1.0)) <= 0.02);
}

TEST_CASE("proportional priors give the same evidence") {
  // PP with a0 = 0.5 on one copy equals a0 = 0.25 on two copies.
  const GlmModel model = model_for(FamilyKind::poisson);
  const auto data = zoo_data(model, 90);
  const std::vector<Dataset> once = {data[0], data[1]};
  const std::vector<Dataset> twice = {data[0], data[1], data[1]};
  PPSpec a, b;
  a.a0 = Eigen::VectorXd::Constant(1, 0.5);
  b.a0 = Eigen::VectorXd::Constant(2, 0.25);
  const EvidenceResult ra = marginal_likelihood(a, model, once, quick_config(31));
  const EvidenceResult rb = marginal_likelihood(b, model, twice, quick_config(32));
  CHECK(ra.prior_sampled);
  CHECK(std::abs(ra.log_evidence - rb.log_evidence) <= 0.02);
}

TEST_CASE("degenerate Beta prior makes NPP evidence match PP evidence") {
  const GlmModel gauss(Family(FamilyKind::gaussian), Link(LinkKind::identity), 1.0);
  Eigen::VectorXd b(2);
  b << 1.0, -0.5;
  const Dataset cur = simulate(gauss, b, 1.0, 30, 41);
  const Dataset hist = simulate(gauss, b, 1.0, 40, 42);
  const std::vector<Dataset> data = {cur, hist};
  const Eigen::VectorXd m0 = Eigen::VectorXd::Zero(2), s0 = Eigen::VectorXd::Constant(2, 10.0);
  NPPSpec npp;
  LogNCGrid g;
  for (double a : default_a0_grid(101)) {
    g.a0.push_back(a);
    g.lognc_raw.push_back(conjugate_log_z({hist}, {a}, 1.0, m0, s0));
    g.lognc_smooth.push_back(g.lognc_raw.back());
    g.min_ess_bulk.push_back(1.0);
    g.max_rhat.push_back(1.0);
  }
  npp.grids = {g};
  const double star = 0.4;
  npp.a0_shape1 = 5000.0 * star;
  npp.a0_shape2 = 5000.0 * (1.0 - star);
  PPSpec pp;
  pp.a0 = Eigen::VectorXd::Constant(1, star);
  const double exact_pp = conjugate_log_z({cur, hist}, {1.0, star}, 1.0, m0, s0) -
                          conjugate_log_z({hist}, {star}, 1.0, m0, s0);
  const EvidenceResult rp = marginal_likelihood(pp, gauss, data, quick_config(43));
  CHECK(std::abs(rp.log_evidence - exact_pp) <= 0.05);
  const EvidenceResult rn = marginal_likelihood(npp, gauss, data, quick_config(44));
  CHECK(std::abs(rn.log_evidence - rp.log_evidence) <= 0.1);
}

TEST_CASE("Bayes factors and elicitation helpers") {
  CHECK(bayes_factor(2.0, 2.0) == 1.0);
  CHECK(bayes_factor(std::log(3.0), 0.0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(bayes_factor_label(std::log(3.0)) == "substantial");
  CHECK(bayes_factor_label(0.5) == "weak");
  CHECK(bayes_factor_label(-0.1) == "none");
  CHECK(bayes_factor(1.3, -0.4) == 1.0 / bayes_factor(-0.4, 1.3));

  const auto [a, bb] = solve_beta_hyper((183.0 / 822.0) / 2.0, 1.0);
  CHECK(std::abs(a - 0.77) <= 0.01);
  CHECK(std::abs(bb - 6.21) <= 0.01);
  const auto [a2, b2] = solve_beta_hyper(0.25, 1.0);
  CHECK(a2 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(b2 == doctest::Approx(1.5).epsilon(1e-14));
  // Check the moments directly.
  const double m = 0.2, cv = 0.7;
  const auto [a3, b3] = solve_beta_hyper(m, cv);
  const double mean = a3 / (a3 + b3);
  const double var = a3 * b3 / ((a3 + b3) * (a3 + b3) * (a3 + b3 + 1.0));
  CHECK(mean == doctest::Approx(m).epsilon(1e-12));
  CHECK(std::sqrt(var) / mean == doctest::Approx(cv).epsilon(1e-12));
  CHECK_THROWS(solve_beta_hyper(0.5, 1.0));

  CHECK(a0_half_ratio(183, 822) == doctest::Approx(0.5 * 183.0 / 822.0).epsilon(1e-15));
  CHECK(std::abs(a0_half_ratio(183, 822) - 0.111) <= 5e-4);
  CHECK(a0_half_ratio(900, 100) == 1.0);
}
