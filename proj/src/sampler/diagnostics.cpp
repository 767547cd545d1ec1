#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdprior/errors.hpp"
#include "hdprior/math.hpp"
#include "hdprior/sampler.hpp"

namespace hdprior {

namespace {

Eigen::MatrixXd split_chains(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index half = n / 2;
  if (half < 4) throw ShapeError("diagnostics need at least 4 draws per half-chain");
  Eigen::MatrixXd out(half, 2 * x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    out.col(2 * c) = x.col(c).head(half);
    out.col(2 * c + 1) = x.col(c).tail(half);
  }
  return out;
}

bool is_constant(const Eigen::MatrixXd& x) {
  return x.size() == 0 || (x.array() == x(0, 0)).all();
}

Eigen::MatrixXd rank_normalize(const Eigen::MatrixXd& x) {
  const Eigen::Index s = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), 0);
  const double* v = x.data();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
  Eigen::MatrixXd z(x.rows(), x.cols());
  double* out = z.data();
  const double denom = static_cast<double>(s) + 0.25;
  for (Eigen::Index i = 0; i < s;) {
    Eigen::Index j = i;
    while (j + 1 < s && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // average rank, 1-based
    const double zval = math::std_normal_quantile((rank - 0.375) / denom);
    for (Eigen::Index k = i; k <= j; ++k) out[order[k]] = zval;
    i = j + 1;
  }
  return z;
}

double rhat_basic(const Eigen::MatrixXd& x) {
  const double n = static_cast<double>(x.rows());
  const Eigen::VectorXd means = x.colwise().mean();
  const double grand = means.mean();
  const double m = static_cast<double>(x.cols());
  const double B = n * (means.array() - grand).square().sum() / (m - 1.0);
  double W = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    W += (x.col(c).array() - means(c)).square().sum() / (n - 1.0);
  }
  W /= m;
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

// Biased autocovariances, computed on demand.
class Autocov {
 public:
  explicit Autocov(const Eigen::MatrixXd& x) : x_(x), centered_(x.rows(), x.cols()) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      centered_.col(c) = x.col(c).array() - x.col(c).mean();
    }
  }
  double mean_at(Eigen::Index lag) {
    while (static_cast<Eigen::Index>(cache_.size()) <= lag) {
      const Eigen::Index l = static_cast<Eigen::Index>(cache_.size());
      const Eigen::Index n = x_.rows();
      double total = 0.0;
      for (Eigen::Index c = 0; c < x_.cols(); ++c) {
        total += centered_.col(c).head(n - l).dot(centered_.col(c).tail(n - l)) / static_cast<double>(n);
      }
      cache_.push_back(total / static_cast<double>(x_.cols()));
    }
    return cache_[static_cast<std::size_t>(lag)];
  }

 private:
  const Eigen::MatrixXd& x_;
  Eigen::MatrixXd centered_;
  std::vector<double> cache_;
};

double ess_of(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index m = x.cols();
  const double nd = static_cast<double>(n);
  Autocov acov(x);
  const double mean_var = acov.mean_at(0) * nd / (nd - 1.0);
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m > 1) {
    const Eigen::VectorXd means = x.colwise().mean();
    var_plus += (means.array() - means.mean()).square().sum() / static_cast<double>(m - 1);
  }
  std::vector<double> rho(static_cast<std::size_t>(n), 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - acov.mean_at(1)) / var_plus;
  rho[1] = rho_odd;
  Eigen::Index t = 1;
  while (t < n - 5 && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - acov.mean_at(t + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - acov.mean_at(t + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[static_cast<std::size_t>(t + 1)] = rho_even;
      rho[static_cast<std::size_t>(t + 2)] = rho_odd;
    }
    t += 2;
  }
  const Eigen::Index max_t = t;
  if (rho_even > 0.0) rho[static_cast<std::size_t>(max_t + 1)] = rho_even;
  // Initial monotone sequence.
  for (t = 1; t <= max_t - 2; t += 2) {
    const auto i = static_cast<std::size_t>(t);
    if (rho[i + 1] + rho[i + 2] > rho[i - 1] + rho[i]) {
      rho[i + 1] = 0.5 * (rho[i - 1] + rho[i]);
      rho[i + 2] = rho[i + 1];
    }
  }
  const double total = static_cast<double>(m) * nd;
  double tau = -1.0;
  for (Eigen::Index i = 0; i <= max_t; ++i) tau += 2.0 * rho[static_cast<std::size_t>(i)];
  tau += rho[static_cast<std::size_t>(max_t + 1)];
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

}  // namespace

double split_rhat(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd s = split_chains(x);
  if (is_constant(s)) return std::numeric_limits<double>::quiet_NaN();
  const double bulk = rhat_basic(rank_normalize(s));
  std::vector<double> all(s.data(), s.data() + s.size());
  std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2), all.end());
  double median = all[all.size() / 2];
  if (all.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2)));
  }
  const Eigen::MatrixXd folded = (s.array() - median).abs().matrix();
  const double tail = is_constant(folded) ? bulk : rhat_basic(rank_normalize(folded));
  return std::max(bulk, tail);
}

double ess_bulk(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd s = split_chains(x);
  if (is_constant(s)) return std::numeric_limits<double>::quiet_NaN();
  return ess_of(rank_normalize(s));
}

double ess_basic(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd s = split_chains(x);
  if (is_constant(s)) return std::numeric_limits<double>::quiet_NaN();
  return ess_of(s);
}

double mcse_mean(const Eigen::MatrixXd& x) {
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
  const double ess = ess_basic(x);
  if (std::isnan(ess)) return 0.0;
  return std::sqrt(var / ess);
}

double Diagnostics::max_rhat() const {
  double v = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < rhat.size(); ++i) {
    if (!std::isnan(rhat(i)) && !(v >= rhat(i))) v = rhat(i);
  }
  return v;
}

double Diagnostics::min_ess_bulk() const {
  double v = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < ess_bulk.size(); ++i) {
    if (!std::isnan(ess_bulk(i)) && !(v <= ess_bulk(i))) v = ess_bulk(i);
  }
  return v;
}

Diagnostics diagnostics(const Draws& draws) {
  Diagnostics d;
  d.names = draws.names;
  const auto k = static_cast<Eigen::Index>(draws.names.size());
  d.rhat.resize(k);
  d.ess_bulk.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::MatrixXd m = draws.chain_matrix(static_cast<int>(j));
    d.rhat(j) = split_rhat(m);
    d.ess_bulk(j) = ess_bulk(m);
  }
  d.divergences = draws.divergences();
  for (int c = 0; c < draws.chains; ++c) {
    d.mean_accept.push_back(
        draws.accept_stat.segment(static_cast<Eigen::Index>(c) * draws.iterations, draws.iterations).mean());
  }
  d.step_size = draws.step_size;
  return d;
}

}  // namespace hdprior
