#include <cmath>

#include "hdprior/errors.hpp"
#include "hdprior/evidence.hpp"
#include "hdprior/math.hpp"
#include "hdprior/rng.hpp"

namespace hdprior {

namespace {

// True when the prior part of the target integrates to one without estimation.
bool prior_is_normalized(const PriorSpec& spec, std::span<const Dataset> data) {
  if (std::holds_alternative<InitialSpec>(spec)) return true;
  if (const auto* pp = std::get_if<PPSpec>(&spec)) return pp->a0.size() == 0 || (pp->a0.array() == 0.0).all();
  if (std::holds_alternative<NAPPSpec>(spec)) return data.size() == 2;
  return false;
}

BridgeResult checked_bridge(const Draws& draws, const LogTarget& target, const char* what) {
  BridgeResult r = bridge_sample(draws, target);
  if (!r.converged) {
    throw EvidenceError(std::string("bridge sampling for the ") + what + " did not converge (relative change " +
                        std::to_string(r.rel_change) + ")");
  }
  return r;
}

}  // namespace

EvidenceResult marginal_likelihood(const PriorSpec& spec, const GlmModel& model,
                                   std::span<const Dataset> data, const SamplerConfig& config) {
  if (const auto* rmap = std::get_if<RMAPSpec>(&spec)) {
    const RmapResult r = rmap_posterior(model, data, *rmap, config);
    EvidenceResult e;
    const double w = rmap->w;
    double lz = 0.0;
    if (w == 0.0) lz = r.log_z_vague;
    else if (w == 1.0) lz = r.log_z_informative;
    else lz = math::log_sum_exp(std::log(w) + r.log_z_informative, std::log1p(-w) + r.log_z_vague);
    e.log_evidence = lz;
    e.log_posterior_constant = lz;
    e.posterior_diagnostics = diagnostics(r.draws);
    return e;
  }

  EvidenceResult e;
  const TargetSet post = build_target(spec, model, data, false);
  const Draws draws = sample(*post.primary, config);
  e.posterior_diagnostics = diagnostics(draws);
  e.posterior_bridge = checked_bridge(draws, *post.primary, "posterior");
  e.log_posterior_constant = e.posterior_bridge.log_evidence;

  if (!prior_is_normalized(spec, data)) {
    const TargetSet prior = build_target(spec, model, data, true);
    SamplerConfig pc = config;
    pc.seed = derive_seed(config.seed, 0x5052494FULL);
    const Draws prior_draws = sample(*prior.primary, pc);
    e.prior_bridge = checked_bridge(prior_draws, *prior.primary, "prior");
    e.log_prior_constant = e.prior_bridge->log_evidence;
    e.prior_sampled = true;
  }
  e.log_evidence = e.log_posterior_constant - e.log_prior_constant;
  return e;
}

double bayes_factor(double log_z1, double log_z2) { return std::exp(log_z1 - log_z2); }

std::string bayes_factor_label(double log_bf) {
  if (log_bf >= std::log(3.0)) return "substantial";
  if (log_bf >= 0.0) return "weak";
  return "none";
}

}  // namespace hdprior
