#include "hdprior/survival.hpp"

#include <algorithm>
#include <cmath>

#include "hdprior/errors.hpp"
#include "hdprior/sampler.hpp"

namespace hdprior {

Breaks::Breaks(std::vector<double> cuts) : cuts_(std::move(cuts)) {
  if (cuts_.empty() || cuts_.front() != 0.0) throw DomainError("breaks must start at 0");
  for (std::size_t i = 1; i < cuts_.size(); ++i) {
    if (!(cuts_[i] > cuts_[i - 1]) || !std::isfinite(cuts_[i])) {
      throw DomainError("breaks must be finite and strictly increasing");
    }
  }
}

int Breaks::interval_of(double y) const {
  if (!(y > 0.0)) throw DomainError("survival times must be positive");
  // First cut s_j >= y among s_1..s_{J-1}; otherwise the open last interval.
  auto it = std::lower_bound(cuts_.begin() + 1, cuts_.end(), y);
  return static_cast<int>(it - cuts_.begin());
}

double risk_time(double y, int j, const Breaks& breaks) {
  const int J = breaks.intervals();
  if (j < 1 || j > J) throw RangeError("interval index out of range");
  const double lo = breaks.cuts()[static_cast<std::size_t>(j - 1)];
  const double hi = j < J ? breaks.cuts()[static_cast<std::size_t>(j)] : INFINITY;
  return std::max(0.0, std::min(y, hi) - lo);
}

SurvivalExpansion expand_poisson(const std::vector<SurvivalRecord>& records, const Breaks& breaks,
                                 const std::vector<std::string>& covariate_names) {
  if (records.empty()) throw DataError("no survival records");
  const int J = breaks.intervals();
  const Eigen::Index q = records.front().x.size();
  std::vector<std::string> names;
  for (int j = 1; j <= J; ++j) names.push_back("interval_" + std::to_string(j));
  if (!covariate_names.empty()) {
    if (static_cast<Eigen::Index>(covariate_names.size()) != q) throw ShapeError("covariate names do not match");
    names.insert(names.end(), covariate_names.begin(), covariate_names.end());
  } else {
    for (Eigen::Index k = 0; k < q; ++k) names.push_back("x" + std::to_string(k + 1));
  }

  std::size_t rows = 0;
  for (const auto& r : records) {
    if (!(r.time > 0.0) || !std::isfinite(r.time)) throw DataError("survival times must be positive and finite");
    if (r.event != 0 && r.event != 1) throw DataError("event indicators must be 0 or 1");
    if (r.x.size() != q) throw ShapeError("records have differing numbers of covariates");
    rows += static_cast<std::size_t>(breaks.interval_of(r.time));
  }

  const auto n = static_cast<Eigen::Index>(rows);
  Eigen::VectorXd y(n), offset(n);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, J + q);
  SurvivalExpansion out;
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const int last = breaks.interval_of(r.time);
    for (int j = 1; j <= last; ++j) {
      const double R = risk_time(r.time, j, breaks);
      if (!(R > 0.0)) throw DataError("zero risk time in an at-risk interval");
      y(row) = (j == last) ? r.event : 0;
      X(row, j - 1) = 1.0;
      X.row(row).tail(q) = r.x.transpose();
      offset(row) = std::log(R);
      out.id.push_back(static_cast<int>(i) + 1);
      out.interval.push_back(j);
      ++row;
    }
  }
  out.data = make_dataset(std::move(y), std::move(X), std::move(offset), std::move(names));
  return out;
}

Breaks choose_breaks(const std::vector<double>& event_times, int J) {
  if (J < 1) throw DomainError("number of intervals must be at least 1");
  std::vector<double> sorted = event_times;
  std::sort(sorted.begin(), sorted.end());
  for (double t : sorted) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DataError("event times must be positive and finite");
  }
  std::vector<double> cuts{0.0};
  if (J == 1) return Breaks(cuts);
  std::vector<double> uniq = sorted;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (static_cast<int>(uniq.size()) < J) {
    throw DataError("need at least " + std::to_string(J) + " distinct event times for " + std::to_string(J) +
                    " intervals");
  }
  for (int k = 1; k < J; ++k) {
    const double c = quantile_sorted(sorted, static_cast<double>(k) / J);
    if (c > cuts.back()) cuts.push_back(c);
  }
  return Breaks(cuts);
}

}  // namespace hdprior
