#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "hdprior/errors.hpp"
#include "hdprior/evidence.hpp"
#include "hdprior/parallel.hpp"
#include "hdprior/rng.hpp"
#include "hdprior/smooth.hpp"

namespace hdprior {

InitialPriorHyper tempered_initial_prior(const InitialPriorHyper& h, Eigen::Index p, std::size_t H) {
  InitialPriorHyper r = h.resolved(p);
  const double scale = std::sqrt(static_cast<double>(std::max<std::size_t>(H, 1)));
  r.sigma0 *= scale;
  r.gamma0 *= scale;
  return r;
}

LogNCPoint npp_lognc(const GlmModel& model, const Dataset& historical, double a0,
                     const SamplerConfig& config, const InitialPriorHyper& h) {
  if (!(a0 >= 0.0 && a0 <= 1.0)) throw DomainError("a0 must lie in [0, 1]");
  LogNCPoint out;
  out.a0 = a0;
  if (a0 == 0.0) {
    out.lognc = 0.0;
    out.min_ess_bulk = std::numeric_limits<double>::quiet_NaN();
    out.max_rhat = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const Dataset sets[] = {historical, historical};
  Eigen::VectorXd weights(1);
  weights << a0;
  const TargetPtr target = make_power_target(model, sets, weights, h, false);
  const Draws draws = sample(*target, config);
  const Diagnostics diag = diagnostics(draws);
  const BridgeResult bridge = bridge_sample(draws, *target);
  out.lognc = bridge.log_evidence;
  out.converged = bridge.converged;
  out.min_ess_bulk = diag.min_ess_bulk();
  out.max_rhat = diag.max_rhat();
  return out;
}

std::vector<double> default_a0_grid(int points) {
  if (points < 2) throw DomainError("a0 grid needs at least two points");
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(static_cast<double>(i) / (points - 1));
  return g;
}

LogNCGrid smooth_lognc(std::vector<double> a0, std::vector<double> raw, const LoessOptions& loess) {
  if (a0.size() != raw.size()) throw ShapeError("grid and estimates differ in length");
  if (a0.size() < 5) throw ShapeError("a0 grid needs at least 5 points");
  if (a0.front() != 0.0 || a0.back() != 1.0) throw RangeError("a0 grid must start at 0 and end at 1");
  for (std::size_t i = 1; i < a0.size(); ++i) {
    if (!(a0[i] > a0[i - 1])) throw DomainError("a0 grid must be strictly increasing");
  }
  const auto m = static_cast<Eigen::Index>(a0.size()) - 1;
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(a0.data() + 1, m);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(raw.data() + 1, m);
  const Eigen::VectorXd fitted = loess_fit(x, y, loess.span, loess.degree);
  LogNCGrid grid;
  grid.a0 = std::move(a0);
  grid.lognc_raw = std::move(raw);
  grid.lognc_raw.front() = 0.0;
  grid.lognc_smooth.assign(grid.a0.size(), 0.0);
  for (Eigen::Index i = 0; i < m; ++i) grid.lognc_smooth[static_cast<std::size_t>(i) + 1] = fitted(i);
  return grid;
}

std::vector<LogNCGrid> build_lognc_grid(const GlmModel& model, std::span<const Dataset> historical,
                                        const std::vector<double>& a0_grid,
                                        const SamplerConfig& config, const LoessOptions& loess,
                                        const InitialPriorHyper& h) {
  if (historical.empty()) throw ShapeError("no historical data sets");
  const std::size_t H = historical.size();
  const std::size_t T = a0_grid.size();
  const Eigen::Index p = historical[0].cols();
  const InitialPriorHyper prior = tempered_initial_prior(h, p, H);
  std::vector<LogNCPoint> points(H * T);
  parallel_for(points.size(), config.threads, [&](std::size_t k) {
    const std::size_t hh = k / T;
    const std::size_t t = k % T;
    SamplerConfig c = config;
    c.threads = 1;
    c.seed = derive_seed(config.seed, 0x10000ULL * (hh + 1) + t);
    points[k] = npp_lognc(model, historical[hh], a0_grid[t], c, prior);
  });
  std::vector<LogNCGrid> grids;
  for (std::size_t hh = 0; hh < H; ++hh) {
    std::vector<double> raw(T);
    for (std::size_t t = 0; t < T; ++t) raw[t] = points[hh * T + t].lognc;
    LogNCGrid g = smooth_lognc(a0_grid, std::move(raw), loess);
    for (std::size_t t = 0; t < T; ++t) {
      const auto& pt = points[hh * T + t];
      g.min_ess_bulk.push_back(pt.min_ess_bulk);
      g.max_rhat.push_back(pt.max_rhat);
      if (pt.max_rhat > 1.05 || !pt.converged) g.reliable = false;
    }
    grids.push_back(std::move(g));
  }
  return grids;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse(const std::string& s) {
  if (s == "NA" || s == "NaN" || s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw DataError("invalid number '" + s + "' in grid file");
  return v;
}

}  // namespace

void write_lognc_csv(std::ostream& out, const LogNCGrid& grid) {
  out << "a0,lognc_raw,lognc_smooth,min_ess_bulk,max_rhat\n";
  for (std::size_t i = 0; i < grid.a0.size(); ++i) {
    out << fmt(grid.a0[i]) << ',' << fmt(grid.lognc_raw[i]) << ',' << fmt(grid.lognc_smooth[i]) << ','
        << fmt(i < grid.min_ess_bulk.size() ? grid.min_ess_bulk[i] : std::nan("")) << ','
        << fmt(i < grid.max_rhat.size() ? grid.max_rhat[i] : std::nan("")) << '\n';
  }
}

LogNCGrid read_lognc_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty grid file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "a0,lognc_raw,lognc_smooth,min_ess_bulk,max_rhat") {
    throw DataError("grid file header must be a0,lognc_raw,lognc_smooth,min_ess_bulk,max_rhat");
  }
  LogNCGrid g;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw DataError("grid file row " + std::to_string(row) + " needs 5 columns");
    try {
      g.a0.push_back(parse(cells[0]));
      g.lognc_raw.push_back(parse(cells[1]));
      g.lognc_smooth.push_back(parse(cells[2]));
      g.min_ess_bulk.push_back(parse(cells[3]));
      g.max_rhat.push_back(parse(cells[4]));
    } catch (const std::invalid_argument&) {
      throw DataError("non-numeric value in grid file row " + std::to_string(row));
    }
  }
  if (g.a0.size() < 2) throw DataError("grid file has fewer than two rows");
  for (double r : g.max_rhat) {
    if (r > 1.05) g.reliable = false;
  }
  return g;
}

}  // namespace hdprior
