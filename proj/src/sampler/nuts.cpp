#include <algorithm>
#include <cmath>

#include "hdprior/errors.hpp"
#include "hdprior/math.hpp"
#include "hdprior/parallel.hpp"
#include "hdprior/rng.hpp"
#include "hdprior/sampler.hpp"

namespace hdprior {

void SamplerConfig::validate() const {
  if (chains < 1 || iter_warmup < 0 || iter_sampling < 1) {
    throw ConfigError("sampler counts must be positive");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw ConfigError("target_accept must lie in (0, 1)");
  }
  if (max_tree_depth < 1) throw ConfigError("max_tree_depth must be at least 1");
  if (!(init_radius >= 0.0)) throw ConfigError("init_radius must be non-negative");
}

int Draws::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  throw ShapeError("no draws for '" + name + "'");
}

Eigen::MatrixXd Draws::chain_matrix(int col) const {
  Eigen::MatrixXd m(iterations, chains);
  for (int c = 0; c < chains; ++c) {
    m.col(c) = values.col(col).segment(static_cast<Eigen::Index>(c) * iterations, iterations);
  }
  return m;
}

int Draws::divergences() const {
  return static_cast<int>(std::count(divergent.begin(), divergent.end(), 1));
}

namespace {

constexpr double kMaxDeltaH = 1000.0;

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double logp = 0.0;
};

struct Transition {
  Eigen::VectorXd q;
  double logp = 0.0;
  double accept_stat = 0.0;
  double energy_error = 0.0;
  int depth = 0;
  int n_leapfrog = 0;
  bool divergent = false;
};

class Nuts {
 public:
  Nuts(const LogTarget& target, Rng& rng, int max_depth)
      : target_(target), rng_(rng), max_depth_(max_depth), inv_metric_(Eigen::VectorXd::Ones(target.dim())) {}

  double step_size = 1.0;
  Eigen::VectorXd& inv_metric() { return inv_metric_; }

  void set_position(const Eigen::VectorXd& q) {
    z_.q = q;
    z_.logp = target_.log_density(q, &z_.grad);
    z_.p = Eigen::VectorXd::Zero(q.size());
  }
  const PhasePoint& state() const { return z_; }

  Transition transition() {
    sample_momentum(z_);
    PhasePoint z_fwd = z_, z_bck = z_;
    PhasePoint z_sample = z_, z_propose = z_;

    Eigen::VectorXd p_sharp = sharp(z_.p);
    Eigen::VectorXd p_fwd_fwd = z_.p, p_sharp_fwd_fwd = p_sharp;
    Eigen::VectorXd p_fwd_bck = z_.p, p_sharp_fwd_bck = p_sharp;
    Eigen::VectorXd p_bck_fwd = z_.p, p_sharp_bck_fwd = p_sharp;
    Eigen::VectorXd p_bck_bck = z_.p, p_sharp_bck_bck = p_sharp;
    Eigen::VectorXd rho = z_.p;

    double log_sum_weight = 0.0;
    const double H0 = hamiltonian(z_);
    int n_leapfrog = 0;
    double sum_metro_prob = 0.0;
    divergent_ = false;
    int depth = 0;

    const Eigen::Index d = z_.q.size();
    while (depth < max_depth_) {
      Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(d);
      Eigen::VectorXd rho_bck = Eigen::VectorXd::Zero(d);
      bool valid = false;
      double log_sum_weight_subtree = math::kNegInf;

      if (rng_.uniform() > 0.5) {
        z_ = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck,
                           p_fwd_fwd, H0, 1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_fwd = z_;
      } else {
        z_ = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd,
                           p_bck_bck, H0, -1.0, n_leapfrog, log_sum_weight_subtree, sum_metro_prob);
        z_bck = z_;
      }
      if (!valid) break;
      ++depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (rng_.uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = math::log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = criterion(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && criterion(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
      persist = persist && criterion(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }

    Transition t;
    t.q = z_sample.q;
    t.logp = z_sample.logp;
    t.accept_stat = n_leapfrog > 0 ? sum_metro_prob / n_leapfrog : 0.0;
    t.depth = depth;
    t.n_leapfrog = n_leapfrog;
    t.divergent = divergent_;
    t.energy_error = std::abs(hamiltonian(z_sample) - H0);
    z_ = z_sample;
    return t;
  }

  /// Doubles or halves the step size until a single leapfrog step crosses an
  /// acceptance probability of 0.8.
  void init_stepsize() {
    const PhasePoint z_init = z_;
    sample_momentum(z_);
    double H0 = hamiltonian(z_);
    leapfrog(z_, step_size);
    double h = hamiltonian(z_);
    if (std::isnan(h)) h = math::kInf;
    double delta_H = H0 - h;
    const int direction = delta_H > std::log(0.8) ? 1 : -1;
    for (int iter = 0; iter < 200; ++iter) {
      z_ = z_init;
      sample_momentum(z_);
      H0 = hamiltonian(z_);
      leapfrog(z_, step_size);
      h = hamiltonian(z_);
      if (std::isnan(h)) h = math::kInf;
      delta_H = H0 - h;
      if (direction == 1 && !(delta_H > std::log(0.8))) break;
      if (direction == -1 && !(delta_H < std::log(0.8))) break;
      step_size = direction == 1 ? 2.0 * step_size : 0.5 * step_size;
      if (step_size > 1e7) throw SamplerError("posterior is improper: step size grew without bound");
      if (step_size == 0.0) throw SamplerError("no acceptably small step size found");
    }
    z_ = z_init;
  }

 private:
  Eigen::VectorXd sharp(const Eigen::VectorXd& p) const { return inv_metric_.cwiseProduct(p); }

  double hamiltonian(const PhasePoint& z) const {
    return -z.logp + 0.5 * z.p.dot(inv_metric_.cwiseProduct(z.p));
  }

  void sample_momentum(PhasePoint& z) {
    for (Eigen::Index i = 0; i < z.p.size(); ++i) z.p(i) = rng_.normal() / std::sqrt(inv_metric_(i));
  }

  void leapfrog(PhasePoint& z, double eps) {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    z.logp = target_.log_density(z.q, &z.grad);
    if (!std::isfinite(z.logp) || !z.grad.allFinite()) {
      z.logp = math::kNegInf;
      return;
    }
    z.p += 0.5 * eps * z.grad;
  }

  static bool criterion(const Eigen::VectorXd& p_sharp_minus, const Eigen::VectorXd& p_sharp_plus,
                        const Eigen::VectorXd& rho) {
    return p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0;
  }

  bool build_tree(int depth, PhasePoint& z_propose, Eigen::VectorXd& p_sharp_beg,
                  Eigen::VectorXd& p_sharp_end, Eigen::VectorXd& rho, Eigen::VectorXd& p_beg,
                  Eigen::VectorXd& p_end, double H0, double sign, int& n_leapfrog,
                  double& log_sum_weight, double& sum_metro_prob) {
    if (depth == 0) {
      leapfrog(z_, sign * step_size);
      ++n_leapfrog;
      double h = hamiltonian(z_);
      if (std::isnan(h)) h = math::kInf;
      if (h - H0 > kMaxDeltaH) divergent_ = true;
      log_sum_weight = math::log_sum_exp(log_sum_weight, H0 - h);
      sum_metro_prob += H0 - h > 0.0 ? 1.0 : std::exp(H0 - h);
      z_propose = z_;
      p_sharp_beg = sharp(z_.p);
      p_sharp_end = p_sharp_beg;
      rho += z_.p;
      p_beg = z_.p;
      p_end = p_beg;
      return !divergent_;
    }

    const Eigen::Index d = z_.q.size();
    double log_sum_weight_init = math::kNegInf;
    Eigen::VectorXd p_init_end(d), p_sharp_init_end(d);
    Eigen::VectorXd rho_init = Eigen::VectorXd::Zero(d);
    if (!build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg,
                    p_init_end, H0, sign, n_leapfrog, log_sum_weight_init, sum_metro_prob)) {
      return false;
    }

    PhasePoint z_propose_final = z_;
    double log_sum_weight_final = math::kNegInf;
    Eigen::VectorXd p_final_beg(d), p_sharp_final_beg(d);
    Eigen::VectorXd rho_final = Eigen::VectorXd::Zero(d);
    if (!build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                    p_final_beg, p_end, H0, sign, n_leapfrog, log_sum_weight_final,
                    sum_metro_prob)) {
      return false;
    }

    const double log_sum_weight_subtree = math::log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = math::log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (rng_.uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    const Eigen::VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = criterion(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && criterion(p_sharp_beg, p_sharp_final_beg, rho_init + p_final_beg);
    persist = persist && criterion(p_sharp_init_end, p_sharp_end, rho_final + p_init_end);
    return persist;
  }

  const LogTarget& target_;
  Rng& rng_;
  int max_depth_;
  Eigen::VectorXd inv_metric_;
  PhasePoint z_;
  bool divergent_ = false;
};

class StepSizeAdaptation {
 public:
  explicit StepSizeAdaptation(double delta) : delta_(delta) {}
  void set_mu(double mu) { mu_ = mu; }
  void restart() {
    counter_ = 0.0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }
  void learn(double& eps, double adapt_stat) {
    counter_ += 1.0;
    adapt_stat = std::min(1.0, adapt_stat);
    const double eta = 1.0 / (counter_ + t0_);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - adapt_stat);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / gamma_;
    const double x_eta = std::pow(counter_, -kappa_);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    eps = std::exp(x);
  }
  double final_step_size() const { return std::exp(x_bar_); }

 private:
  double delta_;
  double mu_ = std::log(10.0);
  double gamma_ = 0.05;
  double t0_ = 10.0;
  double kappa_ = 0.75;
  double counter_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

// Welford accumulator for the metric windows.
class VarianceEstimator {
 public:
  explicit VarianceEstimator(Eigen::Index d) : mean_(Eigen::VectorXd::Zero(d)), m2_(Eigen::VectorXd::Zero(d)) {}
  void restart() {
    n_ = 0;
    mean_.setZero();
    m2_.setZero();
  }
  void add(const Eigen::VectorXd& q) {
    ++n_;
    const Eigen::VectorXd delta = q - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(q - mean_);
  }
  int count() const { return n_; }
  Eigen::VectorXd variance() const { return m2_ / static_cast<double>(n_ - 1); }

 private:
  int n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

class WindowedAdaptation {
 public:
  WindowedAdaptation(int num_warmup, Eigen::Index dim) : num_warmup_(num_warmup), estimator_(dim) {
    init_buffer_ = 75;
    term_buffer_ = 50;
    base_window_ = 25;
    if (num_warmup < 20) {
      enabled_ = false;
      return;
    }
    if (init_buffer_ + base_window_ + term_buffer_ > num_warmup) {
      init_buffer_ = static_cast<int>(0.15 * num_warmup);
      term_buffer_ = static_cast<int>(0.1 * num_warmup);
      base_window_ = num_warmup - (init_buffer_ + term_buffer_);
    }
    window_size_ = base_window_;
    next_window_ = init_buffer_ + window_size_ - 1;
  }

  /// Records q; returns true when a window closes and `inv_metric` was updated.
  bool learn(Eigen::VectorXd& inv_metric, const Eigen::VectorXd& q) {
    if (!enabled_) return false;
    if (in_window()) estimator_.add(q);
    if (end_of_window()) {
      compute_next_window();
      const double n = estimator_.count();
      inv_metric = (n / (n + 5.0)) * estimator_.variance().array() + 1e-3 * (5.0 / (n + 5.0));
      estimator_.restart();
      ++counter_;
      return true;
    }
    ++counter_;
    return false;
  }

 private:
  bool in_window() const {
    return counter_ >= init_buffer_ && counter_ < num_warmup_ - term_buffer_ && counter_ != num_warmup_;
  }
  bool end_of_window() const { return counter_ == next_window_ && counter_ != num_warmup_; }
  void compute_next_window() {
    if (next_window_ == num_warmup_ - term_buffer_ - 1) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != num_warmup_ - term_buffer_ - 1) {
      const int boundary = next_window_ + 2 * window_size_;
      if (boundary >= num_warmup_ - term_buffer_) next_window_ = num_warmup_ - term_buffer_ - 1;
    }
  }

  int num_warmup_;
  bool enabled_ = true;
  int init_buffer_ = 0;
  int term_buffer_ = 0;
  int base_window_ = 0;
  int window_size_ = 0;
  int next_window_ = 0;
  int counter_ = 0;
  VarianceEstimator estimator_;
};

struct ChainResult {
  Eigen::MatrixXd values;
  Eigen::MatrixXd unconstrained;
  Eigen::VectorXd log_density;
  std::vector<std::uint8_t> divergent;
  std::vector<int> tree_depth;
  std::vector<int> n_leapfrog;
  Eigen::VectorXd accept_stat;
  Eigen::VectorXd energy_error;
  double step_size = 0.0;
  Eigen::VectorXd inv_metric;
};

Eigen::VectorXd initial_point(const LogTarget& target, Rng& rng, double radius) {
  const Eigen::Index d = target.dim();
  Eigen::VectorXd q(d), grad(d);
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (Eigen::Index i = 0; i < d; ++i) q(i) = radius * (2.0 * rng.uniform() - 1.0);
    const double lp = target.log_density(q, &grad);
    if (std::isfinite(lp) && grad.allFinite()) return q;
  }
  throw SamplerError("could not find a finite initial point in 100 attempts");
}

ChainResult run_chain(const LogTarget& target, const SamplerConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::Index d = target.dim();
  Nuts nuts(target, rng, config.max_tree_depth);
  nuts.set_position(initial_point(target, rng, config.init_radius));
  nuts.step_size = 1.0;
  nuts.init_stepsize();

  StepSizeAdaptation step_adapt(config.target_accept);
  step_adapt.set_mu(std::log(10.0 * nuts.step_size));
  step_adapt.restart();
  WindowedAdaptation metric_adapt(config.iter_warmup, d);

  for (int it = 0; it < config.iter_warmup; ++it) {
    const Transition t = nuts.transition();
    step_adapt.learn(nuts.step_size, t.accept_stat);
    if (metric_adapt.learn(nuts.inv_metric(), t.q)) {
      nuts.init_stepsize();
      step_adapt.set_mu(std::log(10.0 * nuts.step_size));
      step_adapt.restart();
    }
  }
  if (config.iter_warmup > 0) nuts.step_size = step_adapt.final_step_size();

  const int n = config.iter_sampling;
  const auto names = target.output_names();
  ChainResult r;
  r.values.resize(n, static_cast<Eigen::Index>(names.size()));
  r.unconstrained.resize(n, d);
  r.log_density.resize(n);
  r.divergent.resize(n);
  r.tree_depth.resize(n);
  r.n_leapfrog.resize(n);
  r.accept_stat.resize(n);
  r.energy_error.resize(n);
  for (int it = 0; it < n; ++it) {
    const Transition t = nuts.transition();
    r.values.row(it) = target.outputs(t.q).transpose();
    r.unconstrained.row(it) = t.q.transpose();
    r.log_density(it) = t.logp;
    r.divergent[it] = t.divergent ? 1 : 0;
    r.tree_depth[it] = t.depth;
    r.n_leapfrog[it] = t.n_leapfrog;
    r.accept_stat(it) = t.accept_stat;
    r.energy_error(it) = t.energy_error;
  }
  r.step_size = nuts.step_size;
  r.inv_metric = nuts.inv_metric();
  return r;
}

}  // namespace

Draws sample(const LogTarget& target, const SamplerConfig& config) {
  config.validate();
  if (target.dim() < 1) throw SamplerError("target has no parameters");
  std::vector<ChainResult> results(static_cast<std::size_t>(config.chains));
  std::vector<std::uint64_t> seeds;
  for (int c = 0; c < config.chains; ++c) seeds.push_back(derive_seed(config.seed, static_cast<std::uint64_t>(c)));
  parallel_for(results.size(), config.threads,
               [&](std::size_t c) { results[c] = run_chain(target, config, seeds[c]); });

  Draws draws;
  draws.names = target.output_names();
  draws.chains = config.chains;
  draws.iterations = config.iter_sampling;
  const Eigen::Index n = static_cast<Eigen::Index>(config.chains) * config.iter_sampling;
  draws.values.resize(n, static_cast<Eigen::Index>(draws.names.size()));
  draws.unconstrained.resize(n, target.dim());
  draws.log_density.resize(n);
  draws.accept_stat.resize(n);
  draws.energy_error.resize(n);
  draws.chain_seeds = seeds;
  for (int c = 0; c < config.chains; ++c) {
    const auto& r = results[static_cast<std::size_t>(c)];
    const Eigen::Index off = static_cast<Eigen::Index>(c) * config.iter_sampling;
    draws.values.middleRows(off, config.iter_sampling) = r.values;
    draws.unconstrained.middleRows(off, config.iter_sampling) = r.unconstrained;
    draws.log_density.segment(off, config.iter_sampling) = r.log_density;
    draws.accept_stat.segment(off, config.iter_sampling) = r.accept_stat;
    draws.energy_error.segment(off, config.iter_sampling) = r.energy_error;
    draws.divergent.insert(draws.divergent.end(), r.divergent.begin(), r.divergent.end());
    draws.tree_depth.insert(draws.tree_depth.end(), r.tree_depth.begin(), r.tree_depth.end());
    draws.n_leapfrog.insert(draws.n_leapfrog.end(), r.n_leapfrog.begin(), r.n_leapfrog.end());
    draws.step_size.push_back(r.step_size);
    draws.inv_metric.push_back(r.inv_metric);
  }
  return draws;
}

}  // namespace hdprior
