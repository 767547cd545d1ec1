#include "common.hpp"

namespace hdprior {

ParameterSpace glm_parameter_space(const GlmModel& model, const std::vector<std::string>& names) {
  ParameterSpace space;
  space.add("beta", Transform::identity, names);
  if (model.samples_dispersion()) space.add("dispersion", Transform::log, {"dispersion"});
  return space;
}

std::string prior_name(const PriorSpec& spec) {
  static const char* names[] = {"initial", "pp", "npp", "napp", "bhm", "cp", "leap", "rmap"};
  return names[spec.index()];
}

TargetSet build_target(const PriorSpec& spec, const GlmModel& model, std::span<const Dataset> data,
                       bool prior_only) {
  detail::require_current(data);
  const bool cur = !prior_only;
  TargetSet set;
  if (const auto* s = std::get_if<InitialSpec>(&spec)) {
    set.primary = make_power_target(model, data, {}, s->h, cur);
  } else if (const auto* s = std::get_if<PPSpec>(&spec)) {
    detail::require_historical(data, "power prior");
    set.primary = make_power_target(model, data, s->a0, s->h, cur);
  } else if (const auto* s = std::get_if<NPPSpec>(&spec)) {
    set.primary = make_npp_target(model, data, *s, cur);
  } else if (const auto* s = std::get_if<NAPPSpec>(&spec)) {
    set.primary = make_napp_target(model, data, *s, cur);
  } else if (const auto* s = std::get_if<BHMSpec>(&spec)) {
    set.primary = make_bhm_target(model, data, s->h, cur);
  } else if (const auto* s = std::get_if<CPSpec>(&spec)) {
    set.primary = make_cp_target(model, data, *s, cur);
  } else if (const auto* s = std::get_if<LEAPSpec>(&spec)) {
    set.primary = make_leap_target(model, data, *s, cur);
  } else if (const auto* s = std::get_if<RMAPSpec>(&spec)) {
    if (!(s->w >= 0.0 && s->w <= 1.0)) throw DomainError("RMAP weight must lie in [0, 1]");
    set.primary = make_bhm_target(model, data, s->bhm, cur);
    set.vague = make_power_target(model, data.first(1), {}, s->vague, cur);
  }
  return set;
}

}  // namespace hdprior
