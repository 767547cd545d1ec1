#include "hdprior/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "hdprior/cli/csv.hpp"
#include "hdprior/errors.hpp"
#include "hdprior/evidence.hpp"
#include "hdprior/rng.hpp"
#include "hdprior/survival.hpp"
#include "json.hpp"

namespace hdprior::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kIntercept = "(Intercept)";

int find_column(const Draws& draws, const std::string& name) {
  const auto it = std::find(draws.names.begin(), draws.names.end(), name);
  return it == draws.names.end() ? -1 : static_cast<int>(it - draws.names.begin());
}

// Output files go to a temporary sibling directory first.
class Stage {
 public:
  explicit Stage(const std::string& out_dir) : final_(fs::path(out_dir).lexically_normal()) {
    if (!final_.has_filename()) final_ = final_.parent_path();
    std::random_device rd;
    tmp_ = final_.parent_path() / (final_.filename().string() + ".partial-" + std::to_string(rd()));
    std::error_code ec;
    fs::create_directories(tmp_, ec);
    if (ec) throw ConfigError("cannot create output directory " + tmp_.string() + ": " + ec.message());
  }
  Stage(const Stage&) = delete;
  Stage& operator=(const Stage&) = delete;
  ~Stage() {
    std::error_code ec;
    fs::remove_all(tmp_, ec);
  }

  std::ofstream open(const std::string& name) {
    names_.push_back(name);
    std::ofstream out(tmp_ / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (tmp_ / name).string());
    return out;
  }

  void commit() {
    std::error_code ec;
    fs::create_directories(final_, ec);
    if (ec) throw ConfigError("cannot create output directory " + final_.string() + ": " + ec.message());
    for (const auto& n : names_) {
      fs::rename(tmp_ / n, final_ / n, ec);
      if (ec) throw ConfigError("cannot move " + n + " into " + final_.string() + ": " + ec.message());
    }
  }

 private:
  fs::path final_;
  fs::path tmp_;
  std::vector<std::string> names_;
};

json ptree_json(const boost::property_tree::ptree& t) {
  json j = json::object();
  for (const auto& [section, body] : t) {
    json s = json::object();
    for (const auto& [key, value] : body) s[key] = value.data();
    j[section] = s;
  }
  return j;
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json diagnostics_json(const Diagnostics& d) {
  json params = json::array();
  for (std::size_t i = 0; i < d.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    params.push_back({{"name", d.names[i]}, {"rhat", d.rhat(k)}, {"ess_bulk", d.ess_bulk(k)}});
  }
  return {{"parameters", params},
          {"max_rhat", d.max_rhat()},
          {"min_ess_bulk", d.min_ess_bulk()},
          {"divergences", d.divergences},
          {"mean_accept", d.mean_accept},
          {"step_size", d.step_size}};
}

SamplerConfig lognc_sampler(const RunConfig& cfg) {
  SamplerConfig c = cfg.sampler;
  if (cfg.lognc.iter_warmup) c.iter_warmup = *cfg.lognc.iter_warmup;
  if (cfg.lognc.iter_sampling) c.iter_sampling = *cfg.lognc.iter_sampling;
  c.validate();
  return c;
}

void write_grid(Stage& stage, const LogNCGrid& g, std::size_t h) {
  auto out = stage.open("lognc_hist_" + std::to_string(h) + ".csv");
  write_lognc_csv(out, g);
  auto plot = stage.open("lognc_plot_hist_" + std::to_string(h) + ".csv");
  write_csv_row(plot, {"a0", "value"});
  for (std::size_t i = 0; i < g.a0.size(); ++i) {
    write_csv_row(plot, {format_number(g.a0[i]), format_number(g.lognc_smooth[i])});
  }
}

json grid_json(const std::vector<LogNCGrid>& grids) {
  json a = json::array();
  for (std::size_t h = 0; h < grids.size(); ++h) {
    const auto& g = grids[h];
    a.push_back({{"historical", h + 1},
                 {"reliable", g.reliable},
                 {"a0", g.a0},
                 {"lognc_raw", g.lognc_raw},
                 {"lognc_smooth", g.lognc_smooth},
                 {"min_ess_bulk", g.min_ess_bulk},
                 {"max_rhat", g.max_rhat}});
  }
  return a;
}

std::vector<Dataset> historical_of(const std::vector<Dataset>& data) {
  return std::vector<Dataset>(data.begin() + 1, data.end());
}

void require_historical(const std::vector<Dataset>& data, const std::string& command) {
  if (data.size() < 2) throw ConfigError(command + " needs at least one historical data set");
}

struct Context {
  const RunConfig& cfg;
  Stage& stage;
  json& report;
};

void write_fit_outputs(Context& ctx, const LoadedData& loaded, const Draws& raw) {
  const Draws draws = ctx.cfg.report_original_scale
                          ? to_original_scale(raw, loaded.scales, loaded.data[0].column_names)
                          : raw;
  {
    auto out = ctx.stage.open("draws.csv");
    write_draws_csv(out, draws);
  }
  {
    auto out = ctx.stage.open("summary.csv");
    write_summary_csv(out, summarize(draws));
  }
  ctx.report["reporting_scale"] = ctx.cfg.report_original_scale ? "original" : "standardized";
  ctx.report["diagnostics"] = diagnostics_json(diagnostics(draws));
  ctx.report["seeds"]["chains"] = draws.chain_seeds;
  ctx.report["draws"] = {{"chains", draws.chains}, {"iterations", draws.iterations}};
}

PriorSpec prepared_prior(Context& ctx, const GlmModel& model, const LoadedData& loaded) {
  PriorSpec spec = prior_from_config(ctx.cfg, loaded.data);
  if (auto* npp = std::get_if<NPPSpec>(&spec); npp && npp->grids.empty()) {
    require_historical(loaded.data, "prior npp");
    const auto hist = historical_of(loaded.data);
    npp->grids = build_lognc_grid(model, hist, ctx.cfg.lognc.a0, lognc_sampler(ctx.cfg), ctx.cfg.lognc.loess,
                                  npp->h);
    for (std::size_t h = 0; h < npp->grids.size(); ++h) write_grid(ctx.stage, npp->grids[h], h + 1);
    ctx.report["lognc"] = grid_json(npp->grids);
  }
  if (const auto* pp = std::get_if<PPSpec>(&spec)) ctx.report["a0"] = vec_json(pp->a0);
  if (const auto* npp = std::get_if<NPPSpec>(&spec)) {
    ctx.report["a0_shapes"] = {npp->a0_shape1, npp->a0_shape2};
  }
  if (const auto* napp = std::get_if<NAPPSpec>(&spec)) {
    ctx.report["a0_shapes"] = {napp->a0_shape1, napp->a0_shape2};
  }
  return spec;
}

void run_rmap(Context& ctx, const GlmModel& model, const LoadedData& loaded, const RMAPSpec& spec) {
  require_historical(loaded.data, "prior rmap");
  const RmapResult r = rmap_posterior(model, loaded.data, spec, ctx.cfg.sampler);
  write_fit_outputs(ctx, loaded, r.draws);
  ctx.report["rmap"] = {{"w", spec.w},
                        {"gamma_tilde", r.gamma_tilde},
                        {"log_z_informative", r.log_z_informative},
                        {"log_z_vague", r.log_z_vague},
                        {"informative_picks", r.informative_picks},
                        {"informative_diagnostics", diagnostics_json(diagnostics(r.informative))},
                        {"vague_diagnostics", diagnostics_json(diagnostics(r.vague))}};
}

void cmd_fit(Context& ctx, const LoadedData& loaded) {
  const GlmModel model = model_from_config(ctx.cfg);
  const PriorSpec spec = prepared_prior(ctx, model, loaded);
  if (const auto* rmap = std::get_if<RMAPSpec>(&spec)) return run_rmap(ctx, model, loaded, *rmap);
  const TargetSet targets = build_target(spec, model, loaded.data);
  write_fit_outputs(ctx, loaded, sample(*targets.primary, ctx.cfg.sampler));
}

void cmd_rmap(Context& ctx, const LoadedData& loaded) {
  if (ctx.cfg.prior != "rmap") throw ConfigError("the rmap command needs [prior] type = rmap");
  const GlmModel model = model_from_config(ctx.cfg);
  run_rmap(ctx, model, loaded, std::get<RMAPSpec>(prior_from_config(ctx.cfg, loaded.data)));
}

void cmd_lognc(Context& ctx, const LoadedData& loaded) {
  require_historical(loaded.data, "lognc");
  const GlmModel model = model_from_config(ctx.cfg);
  const auto hist = historical_of(loaded.data);
  const InitialPriorHyper h = initial_hyper_from_config(ctx.cfg, loaded.data[0].cols());
  const auto grids = build_lognc_grid(model, hist, ctx.cfg.lognc.a0, lognc_sampler(ctx.cfg), ctx.cfg.lognc.loess, h);
  for (std::size_t k = 0; k < grids.size(); ++k) write_grid(ctx.stage, grids[k], k + 1);
  ctx.report["lognc"] = grid_json(grids);
}

json evidence_json(const EvidenceResult& e) {
  json j = {{"log_evidence", e.log_evidence},
            {"log_posterior_constant", e.log_posterior_constant},
            {"log_prior_constant", e.log_prior_constant},
            {"prior_sampled", e.prior_sampled},
            {"posterior_bridge_iterations", e.posterior_bridge.iterations},
            {"diagnostics", diagnostics_json(e.posterior_diagnostics)}};
  if (e.prior_bridge) j["prior_bridge_iterations"] = e.prior_bridge->iterations;
  return j;
}

void cmd_evidence(Context& ctx, const LoadedData& loaded) {
  const GlmModel model = model_from_config(ctx.cfg);
  const PriorSpec spec = prepared_prior(ctx, model, loaded);
  const EvidenceResult e = marginal_likelihood(spec, model, loaded.data, ctx.cfg.sampler);
  auto out = ctx.stage.open("evidence.csv");
  write_csv_row(out, {"log_evidence", "log_posterior_constant", "log_prior_constant"});
  write_csv_row(out, {format_number(e.log_evidence), format_number(e.log_posterior_constant),
                      format_number(e.log_prior_constant)});
  ctx.report["evidence"] = evidence_json(e);
}

void cmd_bf(Context& ctx, const LoadedData& loaded) {
  require_historical(loaded.data, "bf");
  const auto& links = ctx.cfg.bf.links;
  const GlmModel m1 = model_from_config(ctx.cfg, links[0]);
  const GlmModel m2 = model_from_config(ctx.cfg, links[1]);
  const auto H = static_cast<Eigen::Index>(loaded.data.size()) - 1;
  const InitialPriorHyper h = initial_hyper_from_config(ctx.cfg, loaded.data[0].cols());
  auto out = ctx.stage.open("bf.csv");
  auto plot = ctx.stage.open("bf_plot.csv");
  write_csv_row(out, {"a0", "log_z_" + links[0], "log_z_" + links[1], "log_bf", "bf", "evidence"});
  write_csv_row(plot, {"a0", "value"});
  json rows = json::array();
  std::uint64_t index = 0;
  for (double a0 : ctx.cfg.bf.a0) {
    if (!(a0 >= 0.0 && a0 <= 1.0)) throw ConfigError("[bf] a0 values must lie in [0, 1]");
    const PriorSpec spec = PPSpec{Eigen::VectorXd::Constant(H, a0), h};
    SamplerConfig c1 = ctx.cfg.sampler;
    c1.seed = derive_seed(ctx.cfg.sampler.seed, index++);
    SamplerConfig c2 = ctx.cfg.sampler;
    c2.seed = derive_seed(ctx.cfg.sampler.seed, index++);
    const EvidenceResult e1 = marginal_likelihood(spec, m1, loaded.data, c1);
    const EvidenceResult e2 = marginal_likelihood(spec, m2, loaded.data, c2);
    const double lbf = e1.log_evidence - e2.log_evidence;
    const std::string label = bayes_factor_label(lbf);
    write_csv_row(out, {format_number(a0), format_number(e1.log_evidence), format_number(e2.log_evidence),
                        format_number(lbf), format_number(bayes_factor(e1.log_evidence, e2.log_evidence)), label});
    write_csv_row(plot, {format_number(a0), format_number(lbf)});
    rows.push_back({{"a0", a0},
                    {"seeds", {c1.seed, c2.seed}},
                    {"log_bf", lbf},
                    {"evidence", label},
                    {links[0], evidence_json(e1)},
                    {links[1], evidence_json(e2)}});
  }
  ctx.report["bf"] = rows;
}

void cmd_survexpand(Context& ctx) {
  const auto& sv = ctx.cfg.survexpand;
  if (sv.input.empty()) throw ConfigError("[survexpand] needs 'input'");
  const CsvTable table = read_csv_file(resolve_path(ctx.cfg, sv.input));
  const int tcol = table.column(sv.time);
  const int ecol = table.column(sv.event);
  if (tcol < 0) throw DataError("column '" + sv.time + "' not found in " + sv.input);
  if (ecol < 0) throw DataError("column '" + sv.event + "' not found in " + sv.input);
  std::vector<std::string> covs = sv.covariates;
  if (covs.empty()) {
    for (const auto& h : table.header) {
      if (h != sv.time && h != sv.event) covs.push_back(h);
    }
  }
  std::vector<int> ccols;
  for (const auto& c : covs) {
    const int k = table.column(c);
    if (k < 0) throw DataError("column '" + c + "' not found in " + sv.input);
    ccols.push_back(k);
  }
  std::vector<SurvivalRecord> records;
  std::vector<double> event_times;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto cell = [&](int col, const std::string& name) {
      double v;
      if (is_missing(row[col]) || !parse_number(row[col], v)) {
        throw DataError(sv.input + ", row " + std::to_string(r + 1) + ": column '" + name + "' is not numeric");
      }
      return v;
    };
    SurvivalRecord rec;
    rec.time = cell(tcol, sv.time);
    const double ev = cell(ecol, sv.event);
    if (ev != 0.0 && ev != 1.0) {
      throw DataError(sv.input + ", row " + std::to_string(r + 1) + ": event must be 0 or 1");
    }
    rec.event = static_cast<int>(ev);
    rec.x.resize(static_cast<Eigen::Index>(ccols.size()));
    for (std::size_t k = 0; k < ccols.size(); ++k) rec.x(static_cast<Eigen::Index>(k)) = cell(ccols[k], covs[k]);
    if (rec.event == 1) event_times.push_back(rec.time);
    records.push_back(std::move(rec));
  }
  std::vector<double> cuts = sv.breaks;
  if (!cuts.empty() && cuts.front() != 0.0) cuts.insert(cuts.begin(), 0.0);
  if (cuts.empty() && sv.intervals <= 0) throw ConfigError("[survexpand] needs 'breaks' or 'intervals'");
  const Breaks breaks = cuts.empty() ? choose_breaks(event_times, sv.intervals) : Breaks(cuts);
  const SurvivalExpansion ex = expand_poisson(records, breaks, covs);

  auto out = ctx.stage.open(sv.output);
  std::vector<std::string> header = {"id", "interval", "delta"};
  for (int j = 1; j <= breaks.intervals(); ++j) header.push_back("dummy_" + std::to_string(j));
  for (const auto& c : covs) header.push_back(c);
  header.push_back("log_risk");
  write_csv_row(out, header);
  const Dataset& d = ex.data;
  std::vector<std::string> fields;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    fields.clear();
    fields.push_back(std::to_string(ex.id[static_cast<std::size_t>(i)]));
    fields.push_back(std::to_string(ex.interval[static_cast<std::size_t>(i)]));
    fields.push_back(format_number(d.y(i)));
    for (Eigen::Index j = 0; j < d.cols(); ++j) fields.push_back(format_number(d.X(i, j)));
    fields.push_back(format_number(d.offset(i)));
    write_csv_row(out, fields);
  }
  ctx.report["survexpand"] = {{"subjects", records.size()},
                              {"rows", d.rows()},
                              {"events", event_times.size()},
                              {"breaks", breaks.cuts()}};
}

}  // namespace

LoadedData load_run_data(const RunConfig& cfg) {
  if (cfg.data.current.empty()) throw ConfigError("[data] needs 'current'");
  if (cfg.data.formula.empty()) throw ConfigError("[data] needs 'formula'");
  LoadedData out;
  out.formula = parse_formula(cfg.data.formula);
  std::vector<std::string> paths = {resolve_path(cfg, cfg.data.current)};
  for (const auto& h : cfg.data.historical) paths.push_back(resolve_path(cfg, h));
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw ConfigError("data file not found: " + p);
  }
  out.data = load_datasets(paths, out.formula, cfg.data.offset);
  if (cfg.data.standardize) out.scales = standardize(out.data);
  return out;
}

void write_draws_csv(std::ostream& out, const Draws& draws) {
  std::vector<std::string> fields = {"chain", "iteration"};
  fields.insert(fields.end(), draws.names.begin(), draws.names.end());
  write_csv_row(out, fields);
  for (Eigen::Index r = 0; r < draws.rows(); ++r) {
    fields.clear();
    fields.push_back(std::to_string(r / draws.iterations + 1));
    fields.push_back(std::to_string(r % draws.iterations + 1));
    for (Eigen::Index c = 0; c < draws.values.cols(); ++c) fields.push_back(format_number(draws.values(r, c)));
    write_csv_row(out, fields);
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  write_csv_row(out, {"variable", "mean", "sd", "q2.5", "q50", "q97.5"});
  for (const auto& r : rows) {
    std::vector<std::string> fields = {r.variable, format_number(r.mean), format_number(r.sd)};
    for (double q : r.quantiles) fields.push_back(format_number(q));
    write_csv_row(out, fields);
  }
}

Draws to_original_scale(const Draws& draws, const std::vector<ScaleRecord>& scales,
                        const std::vector<std::string>& columns) {
  if (scales.empty()) return draws;
  std::map<std::string, ScaleRecord> by_column;
  for (const auto& s : scales) by_column[s.column] = s;

  // Coefficient groups: plain names, suffixed copies (historical or component) and
  // the hierarchical means.
  std::set<std::string> suffixes = {""};
  std::set<std::string> prefixes = {"", "mean_"};
  for (const auto& n : draws.names) {
    for (const auto& c : columns) {
      if (n.size() > c.size() && n.compare(0, c.size(), c) == 0 && n[c.size()] == '_') {
        suffixes.insert(n.substr(c.size()));
      }
    }
  }
  Draws out = draws;
  for (const auto& prefix : prefixes) {
    for (const auto& suffix : suffixes) {
      if (!prefix.empty() && !suffix.empty()) continue;
      const int icol = find_column(draws, prefix + kIntercept + suffix);
      for (const auto& [name, s] : by_column) {
        const int col = find_column(draws, prefix + name + suffix);
        if (col < 0) continue;
        out.values.col(col) = draws.values.col(col) / s.sd;
        if (icol >= 0) out.values.col(icol) -= draws.values.col(col) * (s.mean / s.sd);
      }
    }
  }
  for (const auto& [name, s] : by_column) {
    if (const int col = find_column(draws, "sd_" + name); col >= 0) out.values.col(col) = draws.values.col(col) / s.sd;
    if (const int col = find_column(draws, "comm_" + name); col >= 0) {
      out.values.col(col) = draws.values.col(col) * (s.sd * s.sd);
    }
  }
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const ShapeError*>(&e) ||
      dynamic_cast<const SingularityError*>(&e) || dynamic_cast<const ConvergenceError*>(&e) ||
      dynamic_cast<const RangeError*>(&e)) {
    return 3;
  }
  if (dynamic_cast<const SamplerError*>(&e)) return 4;
  if (dynamic_cast<const EvidenceError*>(&e)) return 5;
  return 1;
}

void run_command(const std::string& command, const RunConfig& cfg) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    throw ConfigError("unknown command '" + command + "'");
  }
  const auto start = std::chrono::steady_clock::now();
  Stage stage(cfg.out_dir);
  json report;
  report["command"] = command;
  report["config"] = ptree_json(resolved_config(cfg));
  report["seeds"] = {{"base", cfg.sampler.seed}};
  Context ctx{cfg, stage, report};

  if (command == "survexpand") {
    cmd_survexpand(ctx);
  } else {
    const LoadedData loaded = load_run_data(cfg);
    const GlmModel model = model_from_config(cfg);
    report["model"] = {{"family", std::string(model.family().name())},
                       {"link", std::string(model.link().name())},
                       {"dispersion", model.samples_dispersion() ? json("sampled") : json(model.fixed_dispersion())}};
    json sets = json::array();
    for (const auto& d : loaded.data) sets.push_back({{"rows", d.rows()}, {"role", d.role == DataRole::current ? "current" : "historical"}});
    report["data"] = {{"columns", loaded.data[0].column_names}, {"sets", sets}};
    json scales = json::array();
    for (const auto& s : loaded.scales) scales.push_back({{"column", s.column}, {"mean", s.mean}, {"sd", s.sd}});
    report["standardization"] = scales;

    if (command == "fit") cmd_fit(ctx, loaded);
    else if (command == "rmap") cmd_rmap(ctx, loaded);
    else if (command == "lognc") cmd_lognc(ctx, loaded);
    else if (command == "evidence") cmd_evidence(ctx, loaded);
    else cmd_bf(ctx, loaded);
  }

  report["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  {
    auto out = stage.open("diagnostics.json");
    out << report.dump(2) << '\n';
  }
  stage.commit();
}

}  // namespace hdprior::cli
