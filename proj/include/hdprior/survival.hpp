#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hdprior/glm.hpp"

namespace hdprior {

struct SurvivalRecord {
  double time = 0.0;
  int event = 0;
  Eigen::VectorXd x;
};

/// Cut points 0 = s_0 < s_1 < ... < s_{J-1}; interval j is (s_{j-1}, s_j] with
/// s_J = infinity.
class Breaks {
 public:
  explicit Breaks(std::vector<double> cuts);

  const std::vector<double>& cuts() const { return cuts_; }
  int intervals() const { return static_cast<int>(cuts_.size()); }
  /// 1-based interval containing time y > 0.
  int interval_of(double y) const;

 private:
  std::vector<double> cuts_;
};

/// [min(y, s_j) - s_{j-1}]_+ for 1-based interval j.
double risk_time(double y, int j, const Breaks& breaks);

struct SurvivalExpansion {
  Dataset data;  // poisson/log rows with interval dummies, covariates and log risk offsets
  std::vector<int> id;        // 1-based subject index per row
  std::vector<int> interval;  // 1-based interval per row
};

/// Piecewise-exponential likelihood as a Poisson regression: one row per subject and
/// interval at risk.
SurvivalExpansion expand_poisson(const std::vector<SurvivalRecord>& records, const Breaks& breaks,
                                 const std::vector<std::string>& covariate_names = {});

/// Cuts at type-7 quantiles k/J of the event times, duplicates collapsed.
Breaks choose_breaks(const std::vector<double>& event_times, int J);

}  // namespace hdprior
