#include <algorithm>
#include <cmath>

#include "hdprior/errors.hpp"
#include "hdprior/evidence.hpp"
#include "hdprior/math.hpp"
#include "hdprior/rng.hpp"

namespace hdprior {

namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

}  // namespace

BridgeResult bridge_sample(const Draws& draws, const LogTarget& target, const BridgeOptions& options) {
  const Eigen::Index d = target.dim();
  if (draws.unconstrained.cols() != d) throw ShapeError("draws do not match the target dimension");
  const int half = draws.iterations / 2;
  if (half < 2 || draws.chains < 1) throw EvidenceError("too few draws for bridge sampling");

  const Eigen::Index n_fit = static_cast<Eigen::Index>(half) * draws.chains;
  const Eigen::Index n_iter = static_cast<Eigen::Index>(draws.iterations - half) * draws.chains;
  Eigen::MatrixXd fit(n_fit, d), iter(n_iter, d);
  for (int c = 0; c < draws.chains; ++c) {
    const Eigen::Index off = static_cast<Eigen::Index>(c) * draws.iterations;
    fit.middleRows(static_cast<Eigen::Index>(c) * half, half) = draws.unconstrained.middleRows(off, half);
    iter.middleRows(static_cast<Eigen::Index>(c) * (draws.iterations - half), draws.iterations - half) =
        draws.unconstrained.middleRows(off + half, draws.iterations - half);
  }

  BridgeResult result;
  result.proposal_mean = fit.colwise().mean().transpose();
  const Eigen::MatrixXd centered = fit.rowwise() - result.proposal_mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n_fit - 1);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov += 1e-8 * Eigen::MatrixXd::Identity(d, d);
    llt.compute(cov);
    if (llt.info() != Eigen::Success) throw EvidenceError("bridge proposal covariance is singular");
  }
  result.proposal_chol = llt.matrixL();
  const Eigen::VectorXd diag = result.proposal_chol.diagonal();
  if (!(diag.array() > 0.0).all()) throw EvidenceError("bridge proposal covariance is singular");
  const double log_det = 2.0 * diag.array().log().sum();
  const double log_norm = -static_cast<double>(d) * math::kLogSqrt2Pi - 0.5 * log_det;

  auto log_proposal = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd z =
        result.proposal_chol.triangularView<Eigen::Lower>().solve(x - result.proposal_mean);
    return log_norm - 0.5 * z.squaredNorm();
  };

  std::uint64_t seed = options.seed.value_or(
      derive_seed(draws.chain_seeds.empty() ? 0 : draws.chain_seeds.front(), 0xB41D6EULL));
  Rng rng(seed);
  const Eigen::Index n_prop = n_iter;
  std::vector<double> l1(static_cast<std::size_t>(n_iter)), l2(static_cast<std::size_t>(n_prop));
  for (Eigen::Index i = 0; i < n_iter; ++i) {
    const Eigen::VectorXd x = iter.row(i).transpose();
    l1[static_cast<std::size_t>(i)] = target.log_density(x, nullptr) - log_proposal(x);
  }
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < n_prop; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) z(k) = rng.normal();
    const Eigen::VectorXd x = result.proposal_mean + result.proposal_chol * z;
    const double lt = target.log_density(x, nullptr);
    l2[static_cast<std::size_t>(i)] = std::isnan(lt) ? math::kNegInf : lt - log_proposal(x);
  }
  for (double v : l1) {
    if (!std::isfinite(v)) throw EvidenceError("target is not finite at a posterior draw");
  }

  const double lstar = median(l1);
  const double n1 = static_cast<double>(n_iter);
  const double n2 = static_cast<double>(n_prop);
  const double log_s1 = std::log(n1 / (n1 + n2));
  const double log_s2 = std::log(n2 / (n1 + n2));
  double log_r = 0.0;  // log of r / exp(lstar)
  std::vector<double> num(l2.size()), den(l1.size());
  result.rel_change = math::kInf;
  for (int it = 1; it <= options.max_iterations; ++it) {
    for (std::size_t j = 0; j < l2.size(); ++j) {
      const double a = l2[j] - lstar;
      num[j] = a == math::kNegInf ? math::kNegInf : a - math::log_sum_exp(log_s1 + a, log_s2 + log_r);
    }
    for (std::size_t i = 0; i < l1.size(); ++i) {
      den[i] = -math::log_sum_exp(log_s1 + l1[i] - lstar, log_s2 + log_r);
    }
    const double next = std::log(n1 / n2) + math::log_sum_exp(num) - math::log_sum_exp(den);
    if (!std::isfinite(next)) throw EvidenceError("bridge sampling iteration produced a non-finite value");
    result.rel_change = std::abs(1.0 - std::exp(log_r - next));
    log_r = next;
    result.iterations = it;
    if (result.rel_change < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.log_evidence = log_r + lstar;
  return result;
}

}  // namespace hdprior
