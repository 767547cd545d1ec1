#include <cmath>
#include <limits>

#include "hdprior/errors.hpp"
#include "hdprior/evidence.hpp"
#include "hdprior/math.hpp"
#include "hdprior/rng.hpp"

namespace hdprior {

double rmap_weight(double w, double log_z_informative, double log_z_vague) {
  if (!(w >= 0.0 && w <= 1.0)) throw DomainError("RMAP weight must lie in [0, 1]");
  if (w == 0.0) return 0.0;
  if (w == 1.0) return 1.0;
  const double a = std::log(w) + log_z_informative;
  const double b = std::log1p(-w) + log_z_vague;
  return std::exp(a - math::log_sum_exp(a, b));
}

RmapResult rmap_posterior(const GlmModel& model, std::span<const Dataset> data, const RMAPSpec& spec,
                          const SamplerConfig& config) {
  if (!(spec.w >= 0.0 && spec.w <= 1.0)) throw DomainError("RMAP weight must lie in [0, 1]");
  const TargetSet targets = build_target(spec, model, data, false);
  RmapResult r;

  SamplerConfig ci = config;
  ci.seed = derive_seed(config.seed, 1);
  SamplerConfig cv = config;
  cv.seed = derive_seed(config.seed, 2);
  r.informative = sample(*targets.primary, ci);
  r.vague = sample(*targets.vague, cv);

  if (spec.w > 0.0 && spec.w < 1.0) {
    // Z_I is the hierarchical posterior constant divided by its historical-only constant.
    const BridgeResult post_i = bridge_sample(r.informative, *targets.primary);
    const TargetSet prior = build_target(spec, model, data, true);
    SamplerConfig cp = config;
    cp.seed = derive_seed(config.seed, 3);
    const Draws prior_draws = sample(*prior.primary, cp);
    const BridgeResult prior_i = bridge_sample(prior_draws, *prior.primary);
    const BridgeResult post_v = bridge_sample(r.vague, *targets.vague);
    if (!post_i.converged || !prior_i.converged || !post_v.converged) {
      throw EvidenceError("bridge sampling for the RMAP weight did not converge");
    }
    r.log_z_informative = post_i.log_evidence - prior_i.log_evidence;
    r.log_z_vague = post_v.log_evidence;
  } else {
    r.log_z_informative = std::numeric_limits<double>::quiet_NaN();
    r.log_z_vague = std::numeric_limits<double>::quiet_NaN();
  }
  r.gamma_tilde = spec.w == 0.0 || spec.w == 1.0 ? spec.w
                                                 : rmap_weight(spec.w, r.log_z_informative, r.log_z_vague);

  // Shared current-data columns.
  const auto& names = r.vague.names;
  std::vector<int> cols;
  for (const auto& n : names) cols.push_back(r.informative.column(n));

  r.draws.names = names;
  r.draws.chains = r.vague.chains;
  r.draws.iterations = r.vague.iterations;
  r.draws.chain_seeds = r.vague.chain_seeds;
  const Eigen::Index n = r.vague.rows();
  r.draws.values.resize(n, static_cast<Eigen::Index>(names.size()));
  r.draws.log_density = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  r.draws.accept_stat.resize(n);
  r.draws.energy_error.resize(n);
  r.draws.divergent.resize(static_cast<std::size_t>(n));
  r.draws.tree_depth.resize(static_cast<std::size_t>(n));
  r.draws.n_leapfrog.resize(static_cast<std::size_t>(n));
  Rng rng(derive_seed(config.seed, 4));
  for (Eigen::Index m = 0; m < n; ++m) {
    const bool pick = rng.bernoulli(r.gamma_tilde);
    const Draws& src = pick ? r.informative : r.vague;
    if (pick) {
      ++r.informative_picks;
      for (std::size_t j = 0; j < cols.size(); ++j) {
        r.draws.values(m, static_cast<Eigen::Index>(j)) = src.values(m, cols[j]);
      }
    } else {
      r.draws.values.row(m) = src.values.row(m);
    }
    r.draws.accept_stat(m) = src.accept_stat(m);
    r.draws.energy_error(m) = src.energy_error(m);
    r.draws.divergent[static_cast<std::size_t>(m)] = src.divergent[static_cast<std::size_t>(m)];
    r.draws.tree_depth[static_cast<std::size_t>(m)] = src.tree_depth[static_cast<std::size_t>(m)];
    r.draws.n_leapfrog[static_cast<std::size_t>(m)] = src.n_leapfrog[static_cast<std::size_t>(m)];
  }
  r.draws.step_size = r.vague.step_size;
  return r;
}

}  // namespace hdprior
