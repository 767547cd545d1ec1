#include <algorithm>
#include <cmath>

#include "hdprior/errors.hpp"
#include "hdprior/sampler.hpp"

namespace hdprior {

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw ShapeError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile probability must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<SummaryRow> summarize(const Draws& draws, const std::vector<double>& probs) {
  if (draws.values.rows() == 0) throw ShapeError("cannot summarize empty draws");
  std::vector<SummaryRow> rows;
  const double n = static_cast<double>(draws.values.rows());
  for (std::size_t j = 0; j < draws.names.size(); ++j) {
    const auto col = draws.values.col(static_cast<Eigen::Index>(j));
    SummaryRow r;
    r.variable = draws.names[j];
    r.mean = col.mean();
    r.sd = n > 1 ? std::sqrt((col.array() - r.mean).square().sum() / (n - 1.0)) : 0.0;
    std::vector<double> sorted(col.data(), col.data() + col.size());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
      r.mean = sorted.front();
      r.sd = 0.0;
    }
    for (double p : probs) r.quantiles.push_back(quantile_sorted(sorted, p));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace hdprior
