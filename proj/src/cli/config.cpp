#include "hdprior/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hdprior/cli/csv.hpp"
#include "hdprior/errors.hpp"

namespace hdprior::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"data", {"current", "historical", "formula", "family", "link", "offset", "dispersion", "standardize"}},
      {"prior",
       {"type", "a0", "a0_shape1", "a0_shape2", "a0_cv", "fixed_a0", "lognc", "mu0", "sigma0", "alpha0",
        "gamma0", "meta_mean_mean", "meta_mean_sd", "meta_sd_mean", "meta_sd_sd", "disp_mean", "disp_sd",
        "disp_hist_mean", "disp_hist_sd", "p_spike", "spike_mean", "spike_sd", "slab_mean", "slab_sd",
        "beta0_mean", "beta0_sd", "K", "prob_conc", "w"}},
      {"sampler",
       {"chains", "iter_warmup", "iter_sampling", "seed", "target_accept", "max_tree_depth", "init_radius",
        "threads"}},
      {"lognc", {"a0", "points", "span", "degree", "iter_warmup", "iter_sampling"}},
      {"bf", {"links", "a0"}},
      {"survexpand", {"input", "time", "event", "covariates", "breaks", "intervals", "output"}},
      {"output", {"dir", "report_original_scale"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double number(const std::string& text, const std::string& key) {
  double v;
  if (!parse_number(trim(text), v)) throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
  return v;
}

int integer(const std::string& text, const std::string& key) {
  const double v = number(text, key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("'" + key + "' expects an integer");
  return static_cast<int>(v);
}

bool boolean(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + text + "'");
}

std::optional<std::string> get(const pt::ptree& tree, const std::string& section, const std::string& key) {
  const auto s = tree.get_child_optional(section);
  if (!s) return std::nullopt;
  const auto v = s->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
  if (!v) return std::nullopt;
  return trim(*v);
}

// Scalar values broadcast to length n; lists must have length n.
Eigen::VectorXd vector_of(const pt::ptree& keys, const std::string& key, Eigen::Index n) {
  const auto v = keys.get_optional<std::string>(pt::ptree::path_type(key, '\0'));
  if (!v) return {};
  const auto xs = parse_list(*v, key);
  if (xs.size() == 1) return Eigen::VectorXd::Constant(n, xs[0]);
  if (static_cast<Eigen::Index>(xs.size()) != n) {
    throw ConfigError("'" + key + "' needs 1 or " + std::to_string(n) + " values, got " +
                      std::to_string(xs.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), n);
}

std::optional<double> scalar_of(const pt::ptree& keys, const std::string& key) {
  const auto v = keys.get_optional<std::string>(pt::ptree::path_type(key, '\0'));
  if (!v) return std::nullopt;
  return number(*v, key);
}

InitialPriorHyper initial_from(const pt::ptree& keys, Eigen::Index p) {
  InitialPriorHyper h;
  h.mu0 = vector_of(keys, "mu0", p);
  h.sigma0 = vector_of(keys, "sigma0", p);
  if (auto v = scalar_of(keys, "alpha0")) h.alpha0 = *v;
  if (auto v = scalar_of(keys, "gamma0")) h.gamma0 = *v;
  return h;
}

BhmHyper bhm_from(const pt::ptree& keys, Eigen::Index p, Eigen::Index H) {
  BhmHyper h;
  h.meta_mean_mean = vector_of(keys, "meta_mean_mean", p);
  h.meta_mean_sd = vector_of(keys, "meta_mean_sd", p);
  h.meta_sd_mean = vector_of(keys, "meta_sd_mean", p);
  h.meta_sd_sd = vector_of(keys, "meta_sd_sd", p);
  if (auto v = scalar_of(keys, "disp_mean")) h.disp_mean = *v;
  if (auto v = scalar_of(keys, "disp_sd")) h.disp_sd = *v;
  h.disp_hist_mean = vector_of(keys, "disp_hist_mean", H);
  h.disp_hist_sd = vector_of(keys, "disp_hist_sd", H);
  return h;
}

bool wants_auto(const RunConfig& cfg) {
  const auto v = cfg.prior_keys.get_optional<std::string>("a0");
  return cfg.a0_auto || (v && trim(*v) == "auto-half-ratio");
}

void forbid(const pt::ptree& keys, std::initializer_list<const char*> names, const std::string& prior) {
  for (const char* n : names) {
    if (keys.get_child_optional(n)) throw ConfigError("key '" + std::string(n) + "' does not apply to prior " + prior);
  }
}

}  // namespace

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(number(item, key));
  return out;
}

RunConfig parse_config(std::istream& in, const std::string& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  const auto& allowed = allowed_keys();
  for (const auto& [section, body] : tree) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) throw ConfigError("config: unknown section [" + section + "]");
    if (!body.data().empty() && body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
    }
  }

  RunConfig cfg;
  cfg.raw = tree;
  cfg.base_dir = base_dir;
  auto& d = cfg.data;
  if (auto v = get(tree, "data", "current")) d.current = *v;
  if (auto v = get(tree, "data", "historical")) d.historical = split_list(*v);
  if (auto v = get(tree, "data", "formula")) d.formula = *v;
  if (auto v = get(tree, "data", "family")) d.family = *v;
  if (auto v = get(tree, "data", "link")) d.link = *v;
  if (auto v = get(tree, "data", "offset")) d.offset = *v;
  if (auto v = get(tree, "data", "dispersion")) d.dispersion = number(*v, "dispersion");
  if (auto v = get(tree, "data", "standardize")) d.standardize = boolean(*v, "standardize");

  if (const auto s = tree.get_child_optional("prior")) {
    cfg.prior_keys = *s;
    if (auto v = get(tree, "prior", "type")) cfg.prior = *v;
    cfg.prior_keys.erase("type");
  }
  static const std::set<std::string> priors = {"initial", "pp", "npp", "napp", "bhm", "cp", "leap", "rmap"};
  if (!priors.count(cfg.prior)) throw ConfigError("config: unknown prior type '" + cfg.prior + "'");

  auto& s = cfg.sampler;
  if (auto v = get(tree, "sampler", "chains")) s.chains = integer(*v, "chains");
  if (auto v = get(tree, "sampler", "iter_warmup")) s.iter_warmup = integer(*v, "iter_warmup");
  if (auto v = get(tree, "sampler", "iter_sampling")) s.iter_sampling = integer(*v, "iter_sampling");
  if (auto v = get(tree, "sampler", "seed")) {
    const double x = number(*v, "seed");
    if (x < 0 || x != std::floor(x)) throw ConfigError("'seed' expects a non-negative integer");
    s.seed = static_cast<std::uint64_t>(x);
  }
  if (auto v = get(tree, "sampler", "target_accept")) s.target_accept = number(*v, "target_accept");
  if (auto v = get(tree, "sampler", "max_tree_depth")) s.max_tree_depth = integer(*v, "max_tree_depth");
  if (auto v = get(tree, "sampler", "init_radius")) s.init_radius = number(*v, "init_radius");
  if (auto v = get(tree, "sampler", "threads")) {
    const int t = integer(*v, "threads");
    if (t < 0) throw ConfigError("'threads' must be non-negative");
    s.threads = static_cast<std::size_t>(t);
  }
  s.validate();

  auto& l = cfg.lognc;
  if (auto v = get(tree, "lognc", "a0")) l.a0 = parse_list(*v, "a0");
  if (auto v = get(tree, "lognc", "points")) {
    if (!l.a0.empty()) throw ConfigError("[lognc] takes either 'a0' or 'points'");
    l.a0 = default_a0_grid(integer(*v, "points"));
  }
  if (l.a0.empty()) l.a0 = default_a0_grid();
  if (auto v = get(tree, "lognc", "span")) l.loess.span = number(*v, "span");
  if (auto v = get(tree, "lognc", "degree")) l.loess.degree = integer(*v, "degree");
  if (auto v = get(tree, "lognc", "iter_warmup")) l.iter_warmup = integer(*v, "iter_warmup");
  if (auto v = get(tree, "lognc", "iter_sampling")) l.iter_sampling = integer(*v, "iter_sampling");

  if (auto v = get(tree, "bf", "links")) cfg.bf.links = split_list(*v);
  if (cfg.bf.links.size() != 2) throw ConfigError("[bf] links needs exactly two link names");
  if (auto v = get(tree, "bf", "a0")) cfg.bf.a0 = parse_list(*v, "a0");
  if (cfg.bf.a0.empty()) cfg.bf.a0 = default_a0_grid(11);

  auto& sv = cfg.survexpand;
  if (auto v = get(tree, "survexpand", "input")) sv.input = *v;
  if (auto v = get(tree, "survexpand", "time")) sv.time = *v;
  if (auto v = get(tree, "survexpand", "event")) sv.event = *v;
  if (auto v = get(tree, "survexpand", "covariates")) sv.covariates = split_list(*v);
  if (auto v = get(tree, "survexpand", "breaks")) sv.breaks = parse_list(*v, "breaks");
  if (auto v = get(tree, "survexpand", "intervals")) sv.intervals = integer(*v, "intervals");
  if (auto v = get(tree, "survexpand", "output")) sv.output = *v;

  if (auto v = get(tree, "output", "dir")) cfg.out_dir = *v;
  if (auto v = get(tree, "output", "report_original_scale")) {
    cfg.report_original_scale = boolean(*v, "report_original_scale");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, std::filesystem::path(path).parent_path().string());
}

std::string resolve_path(const RunConfig& cfg, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || cfg.base_dir.empty()) return path;
  return (std::filesystem::path(cfg.base_dir) / p).string();
}

GlmModel model_from_config(const RunConfig& cfg, const std::string& link_override) {
  try {
    const Family family = Family::parse(cfg.data.family);
    const std::string link = !link_override.empty() ? link_override : cfg.data.link.value_or("");
    const Link l = link.empty() ? Link(family.canonical_link()) : Link::parse(link);
    return GlmModel(family, l, cfg.data.dispersion);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

PriorSpec prior_from_config(const RunConfig& cfg, std::span<const Dataset> data) {
  if (data.empty()) throw DataError("no current data");
  const Eigen::Index p = data[0].cols();
  const auto H = static_cast<Eigen::Index>(data.size()) - 1;
  const pt::ptree& k = cfg.prior_keys;
  const std::string& type = cfg.prior;
  const bool automatic = wants_auto(cfg);
  auto half_ratios = [&] {
    Eigen::VectorXd r(H);
    for (Eigen::Index h = 0; h < H; ++h) r(h) = a0_half_ratio(data[0].rows(), data[h + 1].rows());
    return r;
  };
  auto beta_shapes = [&](double& s1, double& s2) {
    if (automatic) {
      if (H != 1) throw ConfigError("automatic a0 elicitation needs exactly one historical data set");
      if (k.get_child_optional("a0_shape1") || k.get_child_optional("a0_shape2")) {
        throw ConfigError("give either a0 shapes or automatic a0 elicitation, not both");
      }
      const double cv = scalar_of(k, "a0_cv").value_or(1.0);
      try {
        std::tie(s1, s2) = solve_beta_hyper(half_ratios()(0), cv);
      } catch (const DomainError& e) {
        throw ConfigError(std::string("automatic a0 elicitation: ") + e.what());
      }
      return;
    }
    if (auto v = scalar_of(k, "a0_shape1")) s1 = *v;
    if (auto v = scalar_of(k, "a0_shape2")) s2 = *v;
  };

  if (type == "initial") {
    forbid(k, {"a0", "w", "K"}, type);
    return InitialSpec{initial_from(k, p)};
  }
  if (type == "pp") {
    PPSpec s;
    s.h = initial_from(k, p);
    if (automatic) {
      s.a0 = half_ratios();
    } else {
      s.a0 = vector_of(k, "a0", H);
      if (s.a0.size() == 0) throw ConfigError("prior pp needs 'a0' (or a0 = auto-half-ratio)");
    }
    return s;
  }
  if (type == "npp") {
    NPPSpec s;
    s.h = initial_from(k, p);
    beta_shapes(s.a0_shape1, s.a0_shape2);
    if (auto files = k.get_optional<std::string>("lognc")) {
      for (const auto& f : split_list(*files)) {
        std::ifstream in(resolve_path(cfg, f));
        if (!in) throw ConfigError("cannot open lognc grid " + f);
        try {
          s.grids.push_back(read_lognc_csv(in));
        } catch (const Error& e) {
          throw ConfigError(f + ": " + e.what());
        }
      }
      if (static_cast<Eigen::Index>(s.grids.size()) != H) {
        throw ConfigError("prior npp needs one lognc grid per historical data set");
      }
    }
    return s;
  }
  if (type == "napp") {
    NAPPSpec s;
    beta_shapes(s.a0_shape1, s.a0_shape2);
    if (k.get_child_optional("fixed_a0")) s.fixed_a0 = vector_of(k, "fixed_a0", H);
    return s;
  }
  if (type == "bhm") return BHMSpec{bhm_from(k, p, H)};
  if (type == "cp") {
    CPSpec s;
    if (auto v = scalar_of(k, "p_spike")) s.p_spike = *v;
    if (auto v = scalar_of(k, "spike_mean")) s.spike_mean = *v;
    if (auto v = scalar_of(k, "spike_sd")) s.spike_sd = *v;
    if (auto v = scalar_of(k, "slab_mean")) s.slab_mean = *v;
    if (auto v = scalar_of(k, "slab_sd")) s.slab_sd = *v;
    s.beta0_mean = vector_of(k, "beta0_mean", p);
    s.beta0_sd = vector_of(k, "beta0_sd", p);
    if (auto v = scalar_of(k, "disp_mean")) s.disp_mean = *v;
    if (auto v = scalar_of(k, "disp_sd")) s.disp_sd = *v;
    s.disp_hist_mean = vector_of(k, "disp_hist_mean", H);
    s.disp_hist_sd = vector_of(k, "disp_hist_sd", H);
    return s;
  }
  if (type == "leap") {
    LEAPSpec s;
    s.h = initial_from(k, p);
    if (auto v = scalar_of(k, "K")) s.K = static_cast<int>(*v);
    if (s.K < 2) throw ConfigError("prior leap needs K >= 2");
    s.prob_conc = vector_of(k, "prob_conc", s.K);
    return s;
  }
  RMAPSpec s;
  if (auto v = scalar_of(k, "w")) s.w = *v;
  if (!(s.w >= 0.0 && s.w <= 1.0)) throw ConfigError("rmap weight w must lie in [0, 1]");
  s.bhm = bhm_from(k, p, H);
  s.vague = initial_from(k, p);
  return s;
}

InitialPriorHyper initial_hyper_from_config(const RunConfig& cfg, Eigen::Index p) {
  return initial_from(cfg.prior_keys, p);
}

pt::ptree resolved_config(const RunConfig& cfg) {
  pt::ptree t;
  const auto& d = cfg.data;
  t.put("data.current", d.current);
  std::string hist;
  for (std::size_t i = 0; i < d.historical.size(); ++i) hist += (i ? ", " : "") + d.historical[i];
  t.put("data.historical", hist);
  t.put("data.formula", d.formula);
  t.put("data.family", d.family);
  t.put("data.link", d.link.value_or(""));
  t.put("data.offset", d.offset.value_or(""));
  t.put("data.dispersion", d.dispersion ? format_number(*d.dispersion) : "");
  t.put("data.standardize", d.standardize);
  pt::ptree prior;
  prior.put("type", cfg.prior);
  for (const auto& [key, value] : cfg.prior_keys) prior.put(pt::ptree::path_type(key, '\0'), value.data());
  if (cfg.a0_auto) prior.put("a0", "auto-half-ratio");
  t.put_child("prior", prior);
  const auto& s = cfg.sampler;
  t.put("sampler.chains", s.chains);
  t.put("sampler.iter_warmup", s.iter_warmup);
  t.put("sampler.iter_sampling", s.iter_sampling);
  t.put("sampler.seed", s.seed);
  t.put("sampler.target_accept", format_number(s.target_accept));
  t.put("sampler.max_tree_depth", s.max_tree_depth);
  t.put("sampler.init_radius", format_number(s.init_radius));
  t.put("sampler.threads", s.threads);
  std::string grid;
  for (std::size_t i = 0; i < cfg.lognc.a0.size(); ++i) grid += (i ? ", " : "") + format_number(cfg.lognc.a0[i]);
  t.put("lognc.a0", grid);
  t.put("lognc.span", format_number(cfg.lognc.loess.span));
  t.put("lognc.degree", cfg.lognc.loess.degree);
  t.put("lognc.iter_warmup", cfg.lognc.iter_warmup.value_or(s.iter_warmup));
  t.put("lognc.iter_sampling", cfg.lognc.iter_sampling.value_or(s.iter_sampling));
  t.put("bf.links", cfg.bf.links[0] + ", " + cfg.bf.links[1]);
  std::string bfa;
  for (std::size_t i = 0; i < cfg.bf.a0.size(); ++i) bfa += (i ? ", " : "") + format_number(cfg.bf.a0[i]);
  t.put("bf.a0", bfa);
  t.put("output.dir", cfg.out_dir);
  t.put("output.report_original_scale", cfg.report_original_scale);
  return t;
}

}  // namespace hdprior::cli
