#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace plumerom {

/// Objective for minimization: returns the value and writes the gradient.
/// A non-finite value marks an infeasible point; the line search backs off.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;
/// Value only, used for line-search trials.
using ValueFunction = std::function<double(const Eigen::VectorXd& x)>;

struct LbfgsOptions {
  int max_iterations = 500;
  int memory = 8;
  double gradient_tolerance = 1e-6;  // infinity norm of the projected gradient
  double armijo = 1e-4;
  int max_backtracks = 40;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string stop_reason;
};

/// Box-constrained limited-memory BFGS with projected backtracking line search.
/// Variables sitting on a bound with the gradient pointing outward are frozen
/// for the step.
LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, const LbfgsOptions& opts = {});
/// Same, with a cheaper value-only function for the line-search trials. The
/// gradient is requested only at accepted points; `value` and `f` must agree.
LbfgsResult minimize_lbfgs(const Objective& f, const ValueFunction& value, Eigen::VectorXd x0,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, const LbfgsOptions& opts = {});

}  // namespace plumerom
