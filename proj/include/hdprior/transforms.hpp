#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

namespace hdprior {

enum class Transform { identity, log, logit, simplex };

struct ParameterBlock {
  std::string name;
  Transform transform = Transform::identity;
  std::vector<std::string> labels;  // one per constrained value
  int offset = 0;                   // first unconstrained coordinate
  int free_dim = 0;                 // K - 1 for a simplex of size K
  int output_offset = 0;
};

/// Named blocks of unconstrained coordinates and their maps to constrained values.
class ParameterSpace {
 public:
  /// Appends a block; returns its unconstrained offset.
  int add(std::string name, Transform transform, std::vector<std::string> labels);

  int dim() const { return dim_; }
  int output_dim() const { return output_dim_; }
  const std::vector<ParameterBlock>& blocks() const { return blocks_; }
  const ParameterBlock& block(std::string_view name) const;
  bool has_block(std::string_view name) const;

  std::vector<std::string> output_names() const;
  std::vector<std::string> unconstrained_names() const;

  Eigen::VectorXd constrain(const Eigen::VectorXd& u) const;
  Eigen::VectorXd unconstrain(const Eigen::VectorXd& x) const;
  /// Sum of log |d constrained / d unconstrained| over all blocks, gradient added
  /// into grad when non-null.
  double log_jacobian(const Eigen::VectorXd& u, Eigen::VectorXd* grad) const;

 private:
  std::vector<ParameterBlock> blocks_;
  int dim_ = 0;
  int output_dim_ = 0;
};

/// Stick-breaking map from R^{K-1} to the K-simplex, with
/// z_k = inv_logit(u_k - log(K - k - 1)) so that u = 0 is the centre.
struct StickBreak {
  Eigen::VectorXd log_x;  // length K
  Eigen::VectorXd z;      // length K - 1
  double log_jacobian = 0.0;
};

StickBreak stick_break(const Eigen::Ref<const Eigen::VectorXd>& u);

/// Given d f / d log x, adds d (f + log_jacobian) / d u into grad_u.
void stick_break_pullback(const StickBreak& sb, const Eigen::VectorXd& grad_log_x,
                          Eigen::Ref<Eigen::VectorXd> grad_u);

Eigen::VectorXd stick_unbreak(const Eigen::VectorXd& x);

}  // namespace hdprior
