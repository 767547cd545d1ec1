#include "hdprior/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdprior/errors.hpp"

namespace hdprior {

namespace {

double tricube(double u) {
  if (u >= 1.0) return 0.0;
  const double t = 1.0 - u * u * u;
  return t * t * t;
}

}  // namespace

Eigen::VectorXd loess_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double span,
                          int degree) {
  const Eigen::Index n = x.size();
  if (y.size() != n) throw ShapeError("loess: x and y differ in length");
  if (degree < 0 || degree > 2) throw DomainError("loess: degree must be 0, 1 or 2");
  if (!(span > 0.0 && span <= 1.0)) throw DomainError("loess: span must lie in (0, 1]");
  if (n < std::max<Eigen::Index>(3, degree + 2)) throw ShapeError("loess: too few points");
  {
    std::vector<double> sorted(x.data(), x.data() + n);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw DomainError("loess: x values must be distinct");
    }
  }

  const Eigen::Index q = std::min<Eigen::Index>(
      n, std::max<Eigen::Index>(degree + 1, static_cast<Eigen::Index>(std::ceil(span * n - 1e-9))));
  Eigen::VectorXd fitted(n);
  std::vector<double> dist(n);
  std::vector<Eigen::Index> order(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) dist[k] = std::abs(x(k) - x(i));
    std::iota(order.begin(), order.end(), 0);
    std::nth_element(order.begin(), order.begin() + (q - 1), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return dist[a] < dist[b]; });
    double h = dist[order[q - 1]];
    if (h <= 0.0) h = 1.0;

    auto local_fit = [&](int deg, double& value) {
      Eigen::MatrixXd A(n, deg + 1);
      Eigen::VectorXd b(n);
      Eigen::Index used = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double w = tricube(dist[k] / h);
        if (w <= 0.0) continue;
        const double sw = std::sqrt(w);
        const double d = x(k) - x(i);
        double pw = 1.0;
        for (int c = 0; c <= deg; ++c) {
          A(used, c) = sw * pw;
          pw *= d;
        }
        b(used) = sw * (y(k) - y(i));  // centred so constant data fit exactly
        ++used;
      }
      auto qr = A.topRows(used).colPivHouseholderQr();
      if (qr.rank() < deg + 1) return false;
      value = y(i) + qr.solve(b.head(used))(0);
      return std::isfinite(value);
    };

    double value = 0.0;
    if (!local_fit(degree, value) && !local_fit(0, value)) value = y(i);
    fitted(i) = value;
  }
  return fitted;
}

Interpolant::Interpolant(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size()) throw ShapeError("interpolant: knots and values differ in length");
  if (x_.size() < 2) throw ShapeError("interpolant needs at least two knots");
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) throw DomainError("interpolant knots must be strictly ascending");
  }
}

double Interpolant::eval(double q, double* slope) const {
  if (!(q >= x_.front() && q <= x_.back())) {
    throw RangeError("interpolation point " + std::to_string(q) + " outside [" +
                     std::to_string(x_.front()) + ", " + std::to_string(x_.back()) + "]");
  }
  // First knot >= q; segment [k-1, k].
  auto it = std::lower_bound(x_.begin(), x_.end(), q);
  std::size_t k = static_cast<std::size_t>(it - x_.begin());
  if (k == 0) k = 1;
  const double x0 = x_[k - 1], x1 = x_[k];
  const double s = (y_[k] - y_[k - 1]) / (x1 - x0);
  if (slope) *slope = s;
  if (q == x1) return y_[k];
  if (q == x0) return y_[k - 1];
  return y_[k - 1] + s * (q - x0);
}

double Interpolant::operator()(double q) const { return eval(q, nullptr); }

double interp_linear(const Interpolant& itp, double q) { return itp(q); }

}  // namespace hdprior
