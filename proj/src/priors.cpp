#include "plumerom/priors.hpp"

#include <cmath>
#include <string>

#include "plumerom/errors.hpp"

namespace plumerom {

GammaPrior gamma_from_mode_mean(double mode, double mean) {
  if (!(mode > 0.0) || !(mean > mode) || !std::isfinite(mean)) {
    throw ConfigError("Gamma prior needs 0 < mode < mean (mode " + std::to_string(mode) + ", mean " +
                      std::to_string(mean) + ")");
  }
  const double rate = 1.0 / (mean - mode);
  return {mean * rate, rate};
}

GammaPrior gamma_from_mode_variance(double mode, double variance) {
  if (!(mode > 0.0) || !(variance > 0.0) || !std::isfinite(mode) || !std::isfinite(variance)) {
    throw ConfigError("Gamma prior needs a positive mode and variance");
  }
  const double rate = (mode + std::sqrt(mode * mode + 4.0 * variance)) / (2.0 * variance);
  return {mode * rate + 1.0, rate};
}

double PowerLaw::operator()(double l) const { return prefactor * std::pow(l, exponent); }

PowerLaw fit_noise_power_law(const std::vector<double>& per_mode) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < per_mode.size(); ++i) {
    if (per_mode[i] > 0.0) {
      xs.push_back(std::log(static_cast<double>(i + 1)));
      ys.push_back(std::log(per_mode[i]));
    }
  }
  if (xs.size() < 3) throw DataError("power-law fit needs at least 3 positive noise estimates");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double b = sxx > 0.0 ? sxy / sxx : 0.0;
  return {std::exp(my - b * mx), b};
}

NoiseEstimate estimate_noise(const ReducedBasis& basis, const Eigen::MatrixXd& full,
                             const Eigen::MatrixXd& half) {
  if (full.cols() != half.cols() || full.rows() != half.rows()) {
    throw DataError("full and half-window snapshots are not paired");
  }
  if (full.cols() < 2) throw DataError("noise estimation needs at least 2 calibration snapshots");
  const Eigen::MatrixXd diff = project_all(basis, full) - project_all(basis, half);
  const double n = static_cast<double>(full.cols());
  NoiseEstimate est;
  est.per_mode.resize(static_cast<std::size_t>(basis.size()));
  int positive = 0;
  for (int l = 0; l < basis.size(); ++l) {
    est.per_mode[l] = diff.row(l).squaredNorm() / (2.0 * n);
    if (est.per_mode[l] > 0.0) ++positive;
  }
  if (positive >= 3) {
    est.fit = fit_noise_power_law(est.per_mode);
    est.fitted = true;
  }
  return est;
}

NoiseEstimate estimate_noise(const ReducedBasis& basis, const SnapshotSet& calibration) {
  if (!calibration.has_half_window()) throw DataError("calibration set has no half-window companions");
  return estimate_noise(basis, calibration.fields, calibration.half_fields);
}

CoefficientMoments coefficient_moments(const ReducedBasis& basis, const Eigen::MatrixXd& fields) {
  if (fields.cols() < 2) throw DataError("moments need at least 2 snapshots");
  const Eigen::MatrixXd k = project_all(basis, fields);
  CoefficientMoments m;
  m.mean = k.rowwise().mean();
  m.variance = (k.colwise() - m.mean).rowwise().squaredNorm() / static_cast<double>(k.cols() - 1);
  return m;
}

PriorSet build_priors(int l, const PowerLaw& noise_fit, const PriorOptions& opts) {
  if (l < 1) throw ConfigError("mode index must be >= 1");
  if (!(noise_fit.prefactor > 0.0)) throw ConfigError("noise power-law prefactor must be positive");
  PriorSet p;
  double mode = noise_fit(l);
  if (mode > opts.noise_mode_cap) {
    mode = opts.noise_mode_cap;
    p.noise_mode_capped = true;
  }
  p.noise = gamma_from_mode_mean(mode, opts.noise_mean);
  p.signal = {opts.signal_mean, opts.signal_variance};
  const double position_mode = 1.0 / l;
  p.lengthscales[0] = gamma_from_mode_variance(1.0, opts.lengthscale_variance);
  p.lengthscales[1] = gamma_from_mode_variance(1.0, opts.lengthscale_variance);
  p.lengthscales[2] = gamma_from_mode_variance(position_mode, opts.lengthscale_variance);
  p.lengthscales[3] = gamma_from_mode_variance(position_mode, opts.lengthscale_variance);
  return p;
}

}  // namespace plumerom
