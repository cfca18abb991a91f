#pragma once

// Exact GP regression on the unit cube with a Matern-5/2 ARD kernel and
// additive observation noise. Hyperparameters are optimized in log space.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plumerom/matern.hpp"

namespace plumerom {

/// theta = {s^2, rho, lambda_u_zc, lambda_z0, lambda_x_src, lambda_z_src}.
struct Hyperparameters {
  double noise_var = 1e-4;
  double signal_var = 1.0;
  std::array<double, 4> lengthscales{1.0, 1.0, 1.0, 1.0};

  /// Log-space vector in the order above. noise_var must be > 0.
  Eigen::VectorXd to_log() const;
  static Hyperparameters from_log(const Eigen::VectorXd& t);

  bool operator==(const Hyperparameters&) const = default;
};

inline constexpr int kNumHyper = 6;

struct GammaPrior {
  double shape = 2.0;
  double rate = 1.0;

  double mode() const { return (shape - 1.0) / rate; }
  double mean() const { return shape / rate; }
  double variance() const { return shape / (rate * rate); }
  double log_pdf(double x) const;
  double dlog_pdf(double x) const { return (shape - 1.0) / x - rate; }
};

struct GaussianPrior {
  double mean = 1.0;
  double variance = 1.0;

  double log_pdf(double x) const;
  double dlog_pdf(double x) const { return -(x - mean) / variance; }
};

/// Priors over theta. `flat` turns every term into a constant zero.
struct PriorSet {
  GammaPrior noise;
  GaussianPrior signal;
  std::array<GammaPrior, 4> lengthscales;
  bool flat = false;
  bool noise_mode_capped = false;

  static PriorSet make_flat();

  /// Gamma modes for s^2 and lambda, the mean for rho.
  Hyperparameters start_point() const;

  /// Sum of log densities at theta; gradient (w.r.t. log theta) is added to `grad_log`.
  double log_density(const Hyperparameters& theta, Eigen::VectorXd* grad_log) const;
};

struct LikelihoodValue {
  double value = 0.0;
  Eigen::VectorXd gradient;  // w.r.t. log theta, size 6
  bool jitter_applied = false;
};

/// Log marginal likelihood of `targets` given inputs (N x 4) and theta.
/// Throws NumericalError when the covariance is not positive definite after jitter.
LikelihoodValue log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                        const Hyperparameters& theta, bool with_gradient = true);

/// Log marginal likelihood plus log prior.
LikelihoodValue log_posterior(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                              const Hyperparameters& theta, const PriorSet& priors,
                              bool with_gradient = true);

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Fitted GP: training data, theta, Cholesky factor and weights alpha.
class GpModel {
 public:
  GpModel() = default;

  /// Factorize r(U,U) + s^2 I. A single 1e-8 jitter is tried on failure.
  static GpModel fit(Eigen::MatrixXd inputs, Eigen::VectorXd targets, const Hyperparameters& theta);

  Posterior posterior(const Eigen::MatrixXd& test_inputs) const;
  Eigen::VectorXd predict_mean(const Eigen::MatrixXd& test_inputs) const;
  /// Diagonal of the posterior covariance, clamped at zero.
  Eigen::VectorXd predict_variance(const Eigen::MatrixXd& test_inputs) const;

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Hyperparameters& theta() const { return theta_; }
  bool jitter_applied() const { return jitter_; }
  bool fitted() const { return fitted_; }

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  Hyperparameters theta_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
  Eigen::VectorXd alpha_;
  bool jitter_ = false;
  bool fitted_ = false;
};

struct Trajectory {
  Hyperparameters start;
  Hyperparameters result;
  double objective = 0.0;  // maximized value (MLL or log posterior)
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool failed = false;
  std::string stop_reason;
};

struct OptimizationResult {
  Hyperparameters theta;
  double objective = 0.0;
  int total_iterations = 0;
  int total_evaluations = 0;
  std::size_t best_trajectory = 0;
  std::vector<Trajectory> trajectories;
};

/// Log-space box for the optimizer.
struct HyperBounds {
  Hyperparameters lower{1e-8, 1e-3, {1e-3, 1e-3, 1e-3, 1e-3}};
  Hyperparameters upper{2.0, 2.0, {1e3, 1e3, 1e3, 1e3}};
};

struct MllOptions {
  int n_restarts = 15;
  std::uint64_t seed = 0;
  HyperBounds bounds{};
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
};

struct MapOptions {
  std::optional<Hyperparameters> start;  // defaults to the prior start point
  HyperBounds bounds{{1e-8, 1e-3, {1e-3, 1e-3, 1e-3, 1e-3}}, {2.0, 100.0, {1e3, 1e3, 1e3, 1e3}}};
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
};

/// Restart starting points: log-uniform in lambda [1e-2, 10], rho [0.1, 2], s^2 [1e-6, 1].
/// Restart k is the same for every n_restarts >= k + 1.
std::vector<Hyperparameters> mll_starting_points(int n_restarts, std::uint64_t seed);

/// Multi-start maximization of the marginal likelihood. Requires N >= 4.
OptimizationResult optimize_mll(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                const MllOptions& opts = {});

/// Single-start maximization of the log posterior from the prior start point.
OptimizationResult optimize_map(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                const PriorSet& priors, const MapOptions& opts = {});

}  // namespace plumerom
