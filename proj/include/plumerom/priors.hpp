#pragma once

// POD-informed hyperparameter priors: noise level from full- versus
// half-window projections with a power-law fit over the mode index, a fixed
// Gaussian on the signal variance and Gamma length-scale priors whose mode
// shrinks as 1/l for the source-position inputs.

#include <Eigen/Dense>
#include <vector>

#include "plumerom/gpr.hpp"
#include "plumerom/plume.hpp"
#include "plumerom/pod.hpp"

namespace plumerom {

/// Gamma with the given mode and mean; needs 0 < mode < mean.
GammaPrior gamma_from_mode_mean(double mode, double mean);
/// Gamma with the given mode and variance; needs mode > 0 and variance > 0.
GammaPrior gamma_from_mode_variance(double mode, double variance);

struct PowerLaw {
  double prefactor = 0.0;  // a
  double exponent = 0.0;   // b

  double operator()(double l) const;
};

struct NoiseEstimate {
  std::vector<double> per_mode;  // s_l^2 in whitened coefficient units
  PowerLaw fit;
  bool fitted = false;           // false when fewer than 3 entries are positive
};

/// Ordinary least squares of log s^2 on log l over the positive entries (l is 1-based).
/// Throws DataError with fewer than 3 positive entries.
PowerLaw fit_noise_power_law(const std::vector<double>& per_mode);

/// s_l^2 = 1/(2N) sum_n (k_l - k_l,half)^2 over paired columns.
NoiseEstimate estimate_noise(const ReducedBasis& basis, const Eigen::MatrixXd& full,
                             const Eigen::MatrixXd& half);
/// Uses the half-window companions stored with the calibration set.
NoiseEstimate estimate_noise(const ReducedBasis& basis, const SnapshotSet& calibration);

struct CoefficientMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // unbiased
};

/// Per-mode mean and variance of the whitened projections of `fields`.
CoefficientMoments coefficient_moments(const ReducedBasis& basis, const Eigen::MatrixXd& fields);

struct PriorOptions {
  double noise_mean = 0.5;
  double noise_mode_cap = 0.45;
  double signal_mean = 1.0;
  double signal_variance = 0.03;
  double lengthscale_variance = 1.0;

  bool operator==(const PriorOptions&) const = default;
};

/// Priors for mode l (1-based). The noise mode is min(a l^b, cap); the result
/// records whether the cap was hit.
PriorSet build_priors(int l, const PowerLaw& noise_fit, const PriorOptions& opts = {});

}  // namespace plumerom
