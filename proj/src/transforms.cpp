#include "hdprior/transforms.hpp"

#include <cmath>

#include "hdprior/errors.hpp"
#include "hdprior/math.hpp"

namespace hdprior {

int ParameterSpace::add(std::string name, Transform transform, std::vector<std::string> labels) {
  if (labels.empty()) throw ShapeError("parameter block '" + name + "' is empty");
  if (transform == Transform::simplex && labels.size() < 2) {
    throw ShapeError("simplex block '" + name + "' needs at least two components");
  }
  ParameterBlock b;
  b.name = std::move(name);
  b.transform = transform;
  b.labels = std::move(labels);
  b.offset = dim_;
  b.output_offset = output_dim_;
  const int k = static_cast<int>(b.labels.size());
  b.free_dim = transform == Transform::simplex ? k - 1 : k;
  dim_ += b.free_dim;
  output_dim_ += k;
  blocks_.push_back(std::move(b));
  return blocks_.back().offset;
}

const ParameterBlock& ParameterSpace::block(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw ShapeError("no parameter block named '" + std::string(name) + "'");
}

bool ParameterSpace::has_block(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return true;
  }
  return false;
}

std::vector<std::string> ParameterSpace::output_names() const {
  std::vector<std::string> out;
  for (const auto& b : blocks_) out.insert(out.end(), b.labels.begin(), b.labels.end());
  return out;
}

std::vector<std::string> ParameterSpace::unconstrained_names() const {
  std::vector<std::string> out;
  for (const auto& b : blocks_) {
    for (int i = 0; i < b.free_dim; ++i) {
      switch (b.transform) {
        case Transform::identity: out.push_back(b.labels[i]); break;
        case Transform::log: out.push_back("log_" + b.labels[i]); break;
        case Transform::logit: out.push_back("logit_" + b.labels[i]); break;
        case Transform::simplex: out.push_back(b.name + "_free_" + std::to_string(i + 1)); break;
      }
    }
  }
  return out;
}

Eigen::VectorXd ParameterSpace::constrain(const Eigen::VectorXd& u) const {
  if (u.size() != dim_) throw ShapeError("unconstrained vector has the wrong length");
  Eigen::VectorXd x(output_dim_);
  for (const auto& b : blocks_) {
    const auto in = u.segment(b.offset, b.free_dim);
    auto out = x.segment(b.output_offset, static_cast<Eigen::Index>(b.labels.size()));
    switch (b.transform) {
      case Transform::identity: out = in; break;
      case Transform::log: out = in.array().exp(); break;
      case Transform::logit: out = in.unaryExpr([](double v) { return math::inv_logit(v); }); break;
      case Transform::simplex: out = stick_break(in).log_x.array().exp(); break;
    }
  }
  return x;
}

Eigen::VectorXd ParameterSpace::unconstrain(const Eigen::VectorXd& x) const {
  if (x.size() != output_dim_) throw ShapeError("constrained vector has the wrong length");
  Eigen::VectorXd u(dim_);
  for (const auto& b : blocks_) {
    const auto in = x.segment(b.output_offset, static_cast<Eigen::Index>(b.labels.size()));
    auto out = u.segment(b.offset, b.free_dim);
    switch (b.transform) {
      case Transform::identity: out = in; break;
      case Transform::log: out = in.array().log(); break;
      case Transform::logit: out = in.unaryExpr([](double v) { return math::logit(v); }); break;
      case Transform::simplex: out = stick_unbreak(in); break;
    }
  }
  return u;
}

double ParameterSpace::log_jacobian(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const {
  double total = 0.0;
  for (const auto& b : blocks_) {
    for (int i = 0; i < b.free_dim && b.transform != Transform::simplex; ++i) {
      const double v = u(b.offset + i);
      if (b.transform == Transform::log) {
        total += v;
        if (grad) (*grad)(b.offset + i) += 1.0;
      } else if (b.transform == Transform::logit) {
        total += math::log_inv_logit(v) + math::log_inv_logit(-v);
        if (grad) (*grad)(b.offset + i) += 1.0 - 2.0 * math::inv_logit(v);
      }
    }
    if (b.transform == Transform::simplex) {
      const StickBreak sb = stick_break(u.segment(b.offset, b.free_dim));
      total += sb.log_jacobian;
      if (grad) {
        stick_break_pullback(sb, Eigen::VectorXd::Zero(b.free_dim + 1),
                             grad->segment(b.offset, b.free_dim));
      }
    }
  }
  return total;
}

StickBreak stick_break(const Eigen::Ref<const Eigen::VectorXd>& u) {
  const Eigen::Index km1 = u.size();
  const Eigen::Index k = km1 + 1;
  StickBreak sb;
  sb.log_x.resize(k);
  sb.z.resize(km1);
  double log_rest = 0.0;
  for (Eigen::Index i = 0; i < km1; ++i) {
    const double v = u(i) - std::log(static_cast<double>(k - i - 1));
    const double log_z = math::log_inv_logit(v);
    const double log1m_z = math::log_inv_logit(-v);
    sb.z(i) = math::inv_logit(v);
    sb.log_x(i) = log_rest + log_z;
    sb.log_jacobian += log_z + log1m_z + log_rest;
    log_rest += log1m_z;
  }
  sb.log_x(km1) = log_rest;
  return sb;
}

void stick_break_pullback(const StickBreak& sb, const Eigen::VectorXd& grad_log_x,
                          Eigen::Ref<Eigen::VectorXd> grad_u) {
  const Eigen::Index km1 = sb.z.size();
  // Adjoint of log_rest after step i, accumulated backwards.
  double adj_rest = grad_log_x(km1);
  for (Eigen::Index i = km1 - 1; i >= 0; --i) {
    const double z = sb.z(i);
    const double g_log_z = grad_log_x(i) + 1.0;
    const double g_log1m_z = 1.0 + adj_rest;
    grad_u(i) += g_log_z * (1.0 - z) - g_log1m_z * z;
    adj_rest = grad_log_x(i) + 1.0 + adj_rest;
  }
}

Eigen::VectorXd stick_unbreak(const Eigen::VectorXd& x) {
  const Eigen::Index k = x.size();
  Eigen::VectorXd u(k - 1);
  double rest = 1.0;
  for (Eigen::Index i = 0; i < k - 1; ++i) {
    const double z = x(i) / rest;
    u(i) = math::logit(z) + std::log(static_cast<double>(k - i - 1));
    rest -= x(i);
  }
  return u;
}

}  // namespace hdprior
