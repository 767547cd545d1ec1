#include <doctest.h>

#include <cmath>
#include <random>

#include "hdprior/errors.hpp"
#include "hdprior/priors.hpp"
#include "hdprior/sampler.hpp"
#include "support.hpp"

using namespace hdprior;
using namespace testing_support;

namespace {

std::vector<double> column_values(const Draws& d, int col) {
  std::vector<double> v(static_cast<std::size_t>(d.rows()));
  for (Eigen::Index i = 0; i < d.rows(); ++i) v[static_cast<std::size_t>(i)] = d.values(i, col);
  return v;
}

}  // namespace

TEST_CASE("sampler config validation") {
  SamplerConfig c;
  CHECK_NOTHROW(c.validate());
  c.chains = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.target_accept = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.iter_sampling = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_tree_depth = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("five dimensional standard normal") {
  const auto target = std_normal_target(5);
  SamplerConfig cfg;
  cfg.seed = 2024;
  const Draws d = sample(target, cfg);
  REQUIRE(d.rows() == cfg.chains * cfg.iter_sampling);
  CHECK(d.names.size() == 5);
  CHECK(d.divergences() == 0);
  const Diagnostics diag = diagnostics(d);
  CHECK(diag.max_rhat() < 1.01);
  for (int j = 0; j < 5; ++j) {
    const Eigen::MatrixXd m = d.chain_matrix(j);
    const double ess = ess_bulk(m);
    const double mean = m.mean();
    const double sd = std::sqrt((m.array() - mean).square().sum() / (m.size() - 1));
    INFO("coordinate ", j);
    CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(ess));
    CHECK(std::abs(sd - 1.0) <= 0.05);
    CHECK(ks_normal(column_values(d, j)) < 0.02);
  }
  for (double a : diag.mean_accept) CHECK(a == doctest::Approx(0.8).epsilon(0.1));
}

TEST_CASE("energy error at the adapted step size") {
  // At target_accept 0.8 the expected |dH| of the selected point is close to 0.2
  // itself, so the bound is checked with a slightly higher acceptance target.
  const auto target = std_normal_target(5);
  SamplerConfig cfg;
  cfg.seed = 2024;
  cfg.target_accept = 0.9;
  const Draws d = sample(target, cfg);
  CHECK(d.energy_error.mean() < 0.2);
  CHECK(d.divergences() == 0);
}

TEST_CASE("sampling is deterministic given the seed") {
  const auto target = std_normal_target(3);
  SamplerConfig cfg;
  cfg.iter_warmup = 200;
  cfg.iter_sampling = 300;
  cfg.seed = 7;
  cfg.threads = 1;
  const Draws a = sample(target, cfg);
  cfg.threads = 4;
  const Draws b = sample(target, cfg);
  CHECK(a.values == b.values);
  CHECK(a.log_density == b.log_density);
  CHECK(a.chain_seeds == b.chain_seeds);
  cfg.seed = 8;
  const Draws c = sample(target, cfg);
  CHECK(a.values != c.values);
  // Chains are distinct substreams.
  CHECK(a.chain_seeds[0] != a.chain_seeds[1]);
}

TEST_CASE("conjugate gaussian regression posterior") {
  // Known dispersion, so the posterior is exactly normal.
  const GlmModel model(Family(FamilyKind::gaussian), Link(LinkKind::identity), 1.0);
  Eigen::VectorXd beta(3);
  beta << 0.5, -1.0, 2.0;
  const Dataset data = simulate(model, beta, 1.0, 50, 31);
  const auto target = build_target(InitialSpec{}, model, std::span<const Dataset>(&data, 1)).primary;
  const Eigen::MatrixXd prec = data.X.transpose() * data.X + Eigen::MatrixXd::Identity(3, 3) / 100.0;
  const Eigen::MatrixXd cov = prec.inverse();
  const Eigen::VectorXd mean = cov * data.X.transpose() * data.y;
  SamplerConfig cfg;
  cfg.seed = 99;
  const Draws d = sample(*target, cfg);
  CHECK(d.divergences() == 0);
  for (int j = 0; j < 3; ++j) {
    const Eigen::MatrixXd m = d.chain_matrix(j);
    INFO("coefficient ", j);
    CHECK(std::abs(m.mean() - mean(j)) <= 3.0 * mcse_mean(m));
    const double sd = std::sqrt((m.array() - m.mean()).square().mean());
    CHECK(sd == doctest::Approx(std::sqrt(cov(j, j))).epsilon(0.05));
  }
}

TEST_CASE("sampler errors") {
  FunctionTarget nowhere(2, [](const Eigen::VectorXd&, Eigen::VectorXd* g) {
    if (g) g->setZero(2);
    return -std::numeric_limits<double>::infinity();
  });
  SamplerConfig cfg;
  cfg.iter_warmup = 10;
  cfg.iter_sampling = 10;
  CHECK_THROWS_AS(sample(nowhere, cfg), SamplerError);
}

TEST_CASE("diagnostics on independent draws") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd x(2500, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(gen);
  CHECK(split_rhat(x) < 1.01);
  CHECK(split_rhat(x) >= 1.0 - 1e-3);
  CHECK(ess_bulk(x) >= 0.9 * 10000);
  // Rank normalization bounds R-hat for one fully separated chain out of four
  // at about 1.5.
  x.col(2).array() += 10.0;
  CHECK(split_rhat(x) > 1.4);
}

TEST_CASE("effective sample size of an AR(1) chain") {
  const double rho = 0.9;
  const Eigen::MatrixXd x = ar1_chains(10000, 4, rho, 5);
  const double expected = 40000.0 * (1.0 - rho) / (1.0 + rho);
  CHECK(ess_bulk(x) == doctest::Approx(expected).epsilon(0.25));
  CHECK(ess_basic(x) == doctest::Approx(expected).epsilon(0.25));
  CHECK(mcse_mean(x) == doctest::Approx(1.0 / std::sqrt(expected)).epsilon(0.15));
}

TEST_CASE("diagnostics edge cases") {
  CHECK_THROWS(split_rhat(Eigen::MatrixXd::Zero(7, 2)));
  CHECK(std::isnan(split_rhat(Eigen::MatrixXd::Constant(100, 2, 3.0))));
  CHECK(std::isnan(ess_bulk(Eigen::MatrixXd::Constant(100, 2, 3.0))));
}

TEST_CASE("summaries") {
  CHECK(quantile_sorted({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile_sorted({1.0, 2.0, 3.0, 4.0}, 0.25) == 1.75);
  CHECK(quantile_sorted({5.0}, 0.9) == 5.0);

  Draws d;
  d.names = {"c", "ramp"};
  d.chains = 1;
  d.iterations = 10000;
  d.values.resize(10000, 2);
  for (int i = 0; i < 10000; ++i) {
    d.values(i, 0) = 3.25;
    d.values(i, 1) = (i + 1) / 10000.0;
  }
  const auto rows = summarize(d);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mean == 3.25);
  CHECK(rows[0].sd == 0.0);
  for (double q : rows[0].quantiles) CHECK(q == 3.25);
  CHECK(std::abs(rows[1].quantiles[1] - 0.5) <= 1e-4);
  CHECK(rows[1].variable == "ramp");

  Draws empty;
  CHECK_THROWS(summarize(empty));
}
